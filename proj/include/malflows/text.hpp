#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace malflows {

std::string trim(std::string_view s);

// Percent-escapes the characters that would break whitespace-separated token
// files: space, tab, CR, LF and '%' itself.
std::string escape_token(std::string_view token);
std::string unescape_token(std::string_view token);

std::vector<std::string> split_whitespace(std::string_view line);

}  // namespace malflows
