#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace clap::text {

// Whitespace-separated tokens, as used for word counts and length statistics.
std::vector<std::string_view> split_whitespace(std::string_view s);
std::size_t count_words(std::string_view s);

// Lowercased maximal runs of ASCII alphanumerics. Shared by BM25 and the
// hashing encoder so both see the same token stream.
std::vector<std::string> tokenize(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// First n whitespace tokens joined by single spaces.
std::string first_words(std::string_view s, std::size_t n);

}  // namespace clap::text
