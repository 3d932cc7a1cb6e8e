// trace_record.hpp - named numeric tables and their CSV form.
//
// CSV layout: optional "# key: value" metadata lines, one header row, then rows of
// numbers in shortest round-trip decimal form (nan/inf spelled out). Parsing the
// output of to_csv reproduces the record bit for bit.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace zenolock {

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TraceRecord {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;
    /// Column required to be strictly increasing, or -1.
    int monotone_column = 0;

    void add_row(std::vector<double> row);
    void add_metadata(std::string key, std::string value);
    /// Rectangular rows, non-empty header, increasing monotone column.
    void validate() const;
    std::vector<double> column(std::size_t index) const;

    /// NaNs compare equal to NaNs; everything else compares by bits.
    bool operator==(const TraceRecord& other) const;
};

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::string to_csv(const TraceRecord& record);
/// Inverse of to_csv. Ordering is not re-checked (monotone_column = -1).
TraceRecord parse_csv(std::string_view text, std::string name);

/// Writes <dir>/<name>.csv and returns its path.
std::filesystem::path write_csv(const TraceRecord& record, const std::filesystem::path& dir);
TraceRecord read_csv(const std::filesystem::path& path);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace zenolock
