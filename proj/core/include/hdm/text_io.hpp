#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hdm {

// Shortest decimal representation that parses back to the same double.
std::string FormatExact(double value);

// Strict full-string parse; returns false on trailing garbage or overflow.
bool ParseDouble(std::string_view text, double& out);
bool ParseInt(std::string_view text, long long& out);

std::vector<std::string> SplitString(std::string_view text, char delimiter);
std::string_view Trim(std::string_view text);
std::string JoinStrings(const std::vector<std::string>& parts,
                        std::string_view delimiter);

std::string ReadFile(const std::filesystem::path& path);
// Writes atomically enough for our purposes: truncate then write.
void WriteFile(const std::filesystem::path& path, std::string_view contents);

}  // namespace hdm
