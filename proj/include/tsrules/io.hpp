#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace tsrules {

// Throw Error(Io) on failure.
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it over the target.
void write_file(const std::filesystem::path& path, std::string_view data);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

}  // namespace tsrules
