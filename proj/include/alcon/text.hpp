#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace alcon {

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

double parse_double(std::string_view text, std::string_view key);
long long parse_int(std::string_view text, std::string_view key);
std::uint64_t parse_u64(std::string_view text, std::string_view key);
bool parse_bool(std::string_view text, std::string_view key);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view s);

// Ordered key=value lines; '#' starts a comment, blank lines ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(std::string_view text, const std::string& origin);
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace alcon
