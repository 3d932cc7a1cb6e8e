// config.hpp - flat key-value configuration with one [section] per subcommand.
//
//   # comment
//   [zeno2]
//   half_difference = 2
//   cycle_periods = 0.001, 0.05
//
// Keys outside any section are rejected; so are duplicate keys and, once a section
// has been read, keys that nothing consumed. Diagnostics carry file:line.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zenolock {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigEntry {
    std::string value;
    int line = 0;
};

class ConfigSection {
public:
    ConfigSection(std::string source, std::string name, std::map<std::string, ConfigEntry> entries);

    const std::string& name() const { return name_; }
    bool has(const std::string& key) const { return entries_.contains(key); }

    double get_double(const std::string& key, double fallback);
    int get_int(const std::string& key, int fallback);
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::string get_string(const std::string& key, const std::string& fallback);
    /// Comma-separated numbers.
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback);

    /// Throws on the first key no getter asked for.
    void reject_unused() const;

    /// Throws ConfigError pointing at the key's line, or at the file if the key is absent.
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

private:
    const ConfigEntry* find(const std::string& key);

    std::string source_;
    std::string name_;
    std::map<std::string, ConfigEntry> entries_;
    std::set<std::string> used_;
};

class ConfigFile {
public:
    static ConfigFile parse(std::string_view text, std::string source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    /// Empty section when absent, so every key falls back to its default.
    ConfigSection section(const std::string& name) const;
    bool has_section(const std::string& name) const { return sections_.contains(name); }

private:
    std::string source_;
    std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
};

}  // namespace zenolock
