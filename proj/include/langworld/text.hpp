#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace langworld::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

// Renders reals the way the prompt templates expect: integral values keep one
// decimal ("8.0"), everything else uses the shortest round-trip form ("0.25").
std::string format_real(double value);

// Orders "cabinet_2" before "cabinet_13".
bool natural_less(std::string_view a, std::string_view b);

// "a" or "an" for the given noun phrase.
std::string_view article(std::string_view noun);

}  // namespace langworld::text
