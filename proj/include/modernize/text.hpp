#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <string_view>
#include <vector>

namespace modernize::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
bool contains(std::string_view haystack, std::string_view needle);
bool contains_icase(std::string_view haystack, std::string_view needle);

inline bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

/// Lower-cased runs of [A-Za-z0-9_]. Used by every index and embedder so the
/// vocabularies agree.
std::vector<std::string> tokenize(std::string_view s);

/// tokenize() minus stopwords and single-character tokens.
std::vector<std::string> content_terms(std::string_view s);

bool is_stopword(std::string_view lower_word);

/// True when `needle` occurs in `haystack` with no word character on either side.
bool contains_whole_token(std::string_view haystack, std::string_view needle);

std::size_t count_words(std::string_view s);

/// First sentence (ends at . ! ? followed by whitespace, or at a blank line),
/// truncated to `max_chars`.
std::string first_sentence(std::string_view s, std::size_t max_chars = 200);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v, int digits = 16);

/// "http://host:port/prefix" -> ("http://host:port", "/prefix"), trailing slashes dropped.
std::pair<std::string, std::string> split_base_url(const std::string& url);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace modernize::text
