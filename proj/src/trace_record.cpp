#include "zenolock/trace_record.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace zenolock {

namespace {

bool same_value(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace

void TraceRecord::add_row(std::vector<double> row) {
    if (row.size() != columns.size()) {
        throw TraceError(name + ": row has " + std::to_string(row.size()) + " values, expected " +
                         std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

void TraceRecord::add_metadata(std::string key, std::string value) {
    metadata.emplace_back(std::move(key), std::move(value));
}

void TraceRecord::validate() const {
    if (columns.empty() || columns.front().starts_with('#')) throw TraceError(name + ": bad header");
    for (const auto& c : columns) {
        if (c.empty() || c.find_first_of(",\n\r") != std::string::npos) throw TraceError(name + ": bad column label");
    }
    for (const auto& [k, v] : metadata) {
        if (k.empty() || k.find_first_of(":\n\r") != std::string::npos || v.find_first_of("\n\r") != std::string::npos) {
            throw TraceError(name + ": bad metadata entry '" + k + "'");
        }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != columns.size()) throw TraceError(name + ": ragged row " + std::to_string(r));
        if (monotone_column >= 0 && r > 0) {
            const auto c = static_cast<std::size_t>(monotone_column);
            if (!(rows[r][c] > rows[r - 1][c])) {
                throw TraceError(name + ": column '" + columns[c] + "' not increasing at row " + std::to_string(r));
            }
        }
    }
}

std::vector<double> TraceRecord::column(std::size_t index) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(index));
    return out;
}

bool TraceRecord::operator==(const TraceRecord& other) const {
    if (name != other.name || columns != other.columns || metadata != other.metadata ||
        rows.size() != other.rows.size()) {
        return false;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != other.rows[r].size()) return false;
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (!same_value(rows[r][c], other.rows[r][c])) return false;
        }
    }
    return true;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return {buf, res.ptr};
}

double parse_double(std::string_view text) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
        throw TraceError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::string to_csv(const TraceRecord& record) {
    record.validate();
    std::string out;
    for (const auto& [k, v] : record.metadata) out += "# " + k + ": " + v + "\n";
    for (std::size_t c = 0; c < record.columns.size(); ++c) {
        if (c) out += ',';
        out += record.columns[c];
    }
    out += '\n';
    for (const auto& row : record.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_double(row[c]);
        }
        out += '\n';
    }
    return out;
}

TraceRecord parse_csv(std::string_view text, std::string name) {
    TraceRecord record;
    record.name = std::move(name);
    record.monotone_column = -1;
    bool header = false;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = strip_cr(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (!header && line.starts_with("# ")) {
            const auto colon = line.find(": ", 2);
            if (colon == std::string_view::npos) {
                throw TraceError(record.name + ":" + std::to_string(line_no) + ": malformed metadata line");
            }
            record.add_metadata(std::string(line.substr(2, colon - 2)), std::string(line.substr(colon + 2)));
            continue;
        }
        if (!header) {
            for (auto label : split(line, ',')) record.columns.emplace_back(label);
            header = true;
            continue;
        }
        std::vector<double> row;
        try {
            for (auto cell : split(line, ',')) row.push_back(parse_double(cell));
        } catch (const TraceError& e) {
            throw TraceError(record.name + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (row.size() != record.columns.size()) {
            throw TraceError(record.name + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(record.columns.size()) + " values");
        }
        record.rows.push_back(std::move(row));
    }
    if (!header) throw TraceError(record.name + ": missing header row");
    record.validate();
    return record;
}

std::filesystem::path write_csv(const TraceRecord& record, const std::filesystem::path& dir) {
    const auto path = dir / (record.name + ".csv");
    const std::string text = to_csv(record);
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw TraceError("cannot write " + path.string());
    return path;
}

TraceRecord read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.stem().string());
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace zenolock
