#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mcqforge {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now();
std::string to_iso8601(Timestamp t);
Timestamp from_iso8601(const std::string& s);

namespace text {

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string to_lower(std::string_view s);

// Maximal whitespace-delimited tokens; hyphenated compounds stay whole.
std::vector<std::string> words(std::string_view s);
std::size_t word_count(std::string_view s);

// A sentence ends at '.', '!' or '?' followed by whitespace or end of text.
// Abbreviations are not special-cased.
std::vector<std::string> sentences(std::string_view s);
std::size_t sentence_count(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);
std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace text
}  // namespace mcqforge
