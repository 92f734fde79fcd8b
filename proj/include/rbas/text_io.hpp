#pragma once

// Small text helpers shared by the readers, the CSV writers and the CLI.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rbas {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Shortest round-trippable form ("%.17g").
std::string format_double(double v);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

}  // namespace rbas
