#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace minipath {

// Case-folds ASCII letters, collapses runs of whitespace to one space and
// trims both ends. Non-ASCII bytes pass through unchanged.
std::string normalize_term(std::string_view raw);

std::vector<std::string_view> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

// Strips a trailing '\r' left by CRLF files.
std::string_view chomp(std::string_view line);

}  // namespace minipath
