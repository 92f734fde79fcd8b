#pragma once

// Experiment configuration files.
//
//   # comment
//   seed = 7
//   [system]
//   generator = partition_example
//   [sampler]
//   name = cyclic_block_kaczmarz
//   partition = 1,4; 2,3
//
// Keys before the first section header belong to the "" section. Every value
// keeps its line number for error messages. Index lists are 1-based.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbas {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Config {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    /// `origin` prefixes error messages (usually the file name).
    static Config parse(const std::string& text, const std::string& origin = "config");
    static Config load(const std::filesystem::path& path);

    const std::string& text() const { return text_; }
    const std::string& origin() const { return origin_; }

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    const Entry* find(const std::string& section, const std::string& key) const;
    /// Keys of a section in file order.
    std::vector<std::string> keys(const std::string& section) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::optional<std::string> get_string(const std::string& section, const std::string& key) const;
    std::optional<double> get_double(const std::string& section, const std::string& key) const;
    std::optional<std::int64_t> get_int(const std::string& section, const std::string& key) const;
    std::optional<std::uint64_t> get_u64(const std::string& section, const std::string& key) const;
    std::optional<bool> get_bool(const std::string& section, const std::string& key) const;
    std::optional<std::vector<double>> get_doubles(const std::string& section, const std::string& key) const;
    /// "1,2; 3,4" -> {{0,1},{2,3}} (converted to 0-based).
    std::optional<std::vector<std::vector<std::int64_t>>> get_blocks(const std::string& section,
                                                                      const std::string& key) const;

    /// Throws ConfigError for keys of `section` outside `allowed`, and for
    /// sections outside `sections` when called with section == "*".
    void require_known(const std::string& section, const std::vector<std::string>& allowed) const;

    /// ConfigError "origin:line: message" for the entry, or "origin: message".
    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const;

private:
    std::string text_;
    std::string origin_;
    std::map<std::string, std::vector<std::pair<std::string, Entry>>> sections_;
    std::map<std::string, std::size_t> section_lines_;
};

}  // namespace rbas
