#include "rbas/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rbas/text_io.hpp"

namespace rbas {

Config Config::parse(const std::string& text, const std::string& origin) {
    Config c;
    c.text_ = text;
    c.origin_ = origin;
    c.sections_[""];
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    auto error = [&](const std::string& msg) { throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg); };
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') error("unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) error("empty section name");
            if (c.section_lines_.count(section)) error("duplicate section [" + section + "]");
            c.section_lines_[section] = lineno;
            c.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) error("expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) error("missing key before '='");
        auto& entries = c.sections_[section];
        for (const auto& [k, e] : entries)
            if (k == key) error("duplicate key '" + key + "' (first set on line " + std::to_string(e.line) + ")");
        entries.push_back({key, Entry{value, lineno}});
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

bool Config::has_section(const std::string& section) const { return section_lines_.count(section) > 0; }

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    for (const auto& [k, e] : it->second)
        if (k == key) return &e;
    return nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

std::vector<std::string> Config::keys(const std::string& section) const {
    std::vector<std::string> out;
    const auto it = sections_.find(section);
    if (it != sections_.end())
        for (const auto& kv : it->second) out.push_back(kv.first);
    return out;
}

void Config::fail(const std::string& section, const std::string& key, const std::string& message) const {
    const Entry* e = find(section, key);
    const std::string where = section.empty() ? key : "[" + section + "] " + key;
    if (e) throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": " + where + ": " + message);
    throw ConfigError(origin_ + ": " + where + ": " + message);
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

std::optional<std::string> Config::get_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    return e->value;
}

std::optional<double> Config::get_double(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(e->value.c_str(), &end);
    if (e->value.empty() || end != e->value.c_str() + e->value.size() || errno == ERANGE)
        fail(section, key, "expected a number, got '" + e->value + "'");
    return v;
}

std::optional<std::int64_t> Config::get_int(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(e->value.c_str(), &end, 10);
    if (e->value.empty() || end != e->value.c_str() + e->value.size() || errno == ERANGE)
        fail(section, key, "expected an integer, got '" + e->value + "'");
    return v;
}

std::optional<std::uint64_t> Config::get_u64(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (e->value.empty() || e->value.front() == '-' || end != e->value.c_str() + e->value.size() || errno == ERANGE)
        fail(section, key, "expected an unsigned integer, got '" + e->value + "'");
    return v;
}

std::optional<bool> Config::get_bool(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    fail(section, key, "expected true or false, got '" + e->value + "'");
}

std::optional<std::vector<double>> Config::get_doubles(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    std::vector<double> out;
    for (const auto& field : split(e->value, ',')) {
        const std::string t = trim(field);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size()) fail(section, key, "bad number '" + t + "'");
        out.push_back(v);
    }
    return out;
}

std::optional<std::vector<std::vector<std::int64_t>>> Config::get_blocks(const std::string& section,
                                                                         const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& group : split(e->value, ';')) {
        std::vector<std::int64_t> block;
        for (const auto& field : split(group, ',')) {
            const std::string t = trim(field);
            char* end = nullptr;
            const long long v = std::strtoll(t.c_str(), &end, 10);
            if (t.empty() || end != t.c_str() + t.size()) fail(section, key, "bad index '" + t + "'");
            if (v < 1) fail(section, key, "indices are 1-based, got " + t);
            block.push_back(v - 1);
        }
        out.push_back(std::move(block));
    }
    return out;
}

void Config::require_known(const std::string& section, const std::vector<std::string>& allowed) const {
    if (section == "*") {
        for (const auto& [name, line] : section_lines_) {
            if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
                throw ConfigError(origin_ + ":" + std::to_string(line) + ": unknown section [" + name + "]");
        }
        return;
    }
    const auto it = sections_.find(section);
    if (it == sections_.end()) return;
    for (const auto& [k, e] : it->second) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const std::string& a) {
            return a == k || (a.size() > 1 && a.back() == '*' && k.rfind(a.substr(0, a.size() - 1), 0) == 0);
        });
        if (!ok) {
            const std::string where = section.empty() ? "" : " in [" + section + "]";
            throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key '" + k + "'" + where);
        }
    }
}

}  // namespace rbas
