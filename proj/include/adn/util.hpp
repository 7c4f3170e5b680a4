#pragma once

#include <string>
#include <string_view>

namespace adn {

// Shortest decimal text that parses back to the same double. Infinities print as +inf/-inf.
std::string format_number(double value);

std::string_view trim(std::string_view s);

// Whole-file helpers; both throw std::runtime_error naming the path.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace adn
