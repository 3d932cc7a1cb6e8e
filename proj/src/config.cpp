#include "zenolock/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace zenolock {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    }
    return true;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size() && !text.empty();
}

}  // namespace

ConfigSection::ConfigSection(std::string source, std::string name, std::map<std::string, ConfigEntry> entries)
    : source_(std::move(source)), name_(std::move(name)), entries_(std::move(entries)) {}

void ConfigSection::fail(const std::string& key, const std::string& what) const {
    const auto it = entries_.find(key);
    const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": [" + name_ + "] " + key + ": " + what);
}

const ConfigEntry* ConfigSection::find(const std::string& key) {
    used_.insert(key);
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

double ConfigSection::get_double(const std::string& key, double fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    double v = 0.0;
    if (!parse_number(e->value, v) || !std::isfinite(v)) fail(key, "expected a finite number, got '" + e->value + "'");
    return v;
}

int ConfigSection::get_int(const std::string& key, int fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    int v = 0;
    if (!parse_number(e->value, v)) fail(key, "expected an integer, got '" + e->value + "'");
    return v;
}

std::uint64_t ConfigSection::get_uint64(const std::string& key, std::uint64_t fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    if (!parse_number(e->value, v)) fail(key, "expected a non-negative integer, got '" + e->value + "'");
    return v;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    fail(key, "expected true or false, got '" + e->value + "'");
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) {
    const auto* e = find(key);
    return e ? e->value : fallback;
}

std::vector<double> ConfigSection::get_list(const std::string& key, const std::vector<double>& fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    std::string_view rest = e->value;
    for (;;) {
        const auto comma = rest.find(',');
        double v = 0.0;
        if (!parse_number(rest.substr(0, comma), v) || !std::isfinite(v)) {
            fail(key, "expected a comma-separated list of numbers, got '" + e->value + "'");
        }
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

void ConfigSection::reject_unused() const {
    for (const auto& [key, entry] : entries_) {
        if (!used_.contains(key)) fail(key, "unknown key");
    }
}

ConfigFile ConfigFile::parse(std::string_view text, std::string source) {
    ConfigFile file;
    file.source_ = std::move(source);
    std::string current;
    bool in_section = false;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = file.source_ + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            if (!valid_name(name)) throw ConfigError(where + "bad section name");
            current = std::string(name);
            in_section = true;
            file.sections_[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!valid_name(key)) throw ConfigError(where + "bad key name");
        if (!in_section) throw ConfigError(where + "key '" + std::string(key) + "' outside any [section]");
        if (value.empty()) throw ConfigError(where + "empty value for '" + std::string(key) + "'");
        auto& entries = file.sections_[current];
        if (entries.contains(std::string(key))) {
            throw ConfigError(where + "duplicate key '" + std::string(key) + "' (first on line " +
                              std::to_string(entries[std::string(key)].line) + ")");
        }
        entries[std::string(key)] = {std::string(value), line_no};
    }
    return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

ConfigSection ConfigFile::section(const std::string& name) const {
    const auto it = sections_.find(name);
    return {source_, name, it == sections_.end() ? std::map<std::string, ConfigEntry>{} : it->second};
}

}  // namespace zenolock
