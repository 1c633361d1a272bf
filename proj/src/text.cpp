#include "modernize/text.hpp"

#include "modernize/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace modernize::text {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) lines.emplace_back(s.substr(start));
            break;
        }
        std::string_view line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

bool contains_icase(std::string_view haystack, std::string_view needle) {
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_word_char(c)) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stopword(std::string_view w) {
    static constexpr std::array<std::string_view, 64> kStop = {
        "a",    "an",   "and",  "are",   "as",    "at",    "be",    "by",    "can",  "do",
        "does", "for",  "from", "has",   "have",  "how",   "if",    "in",    "into", "is",
        "it",   "its",  "may",  "more",  "no",    "not",   "of",    "on",    "one",  "or",
        "our",  "so",   "such", "than",  "that",  "the",   "their", "them",  "then", "there",
        "these","they", "this", "those", "to",    "too",   "two",   "up",    "use",  "used",
        "uses", "via",  "was",  "we",    "were",  "what",  "when",  "where", "which","while",
        "will", "with", "you",  "your"};
    return std::find(kStop.begin(), kStop.end(), w) != kStop.end();
}

std::vector<std::string> content_terms(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : tokenize(s)) {
        if (t.size() > 1 && !is_stopword(t)) out.push_back(std::move(t));
    }
    return out;
}

bool contains_whole_token(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
        std::size_t end = pos + needle.size();
        bool right_ok = end >= haystack.size() || !is_word_char(haystack[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

std::size_t count_words(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

std::string first_sentence(std::string_view s, std::size_t max_chars) {
    std::string body = trim(s);
    std::size_t end = body.size();
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == body.size() || std::isspace(static_cast<unsigned char>(body[i + 1])))) {
            end = i + 1;
            break;
        }
        if (c == '\n' && i + 1 < body.size() && body[i + 1] == '\n') {
            end = i;
            break;
        }
    }
    std::string sentence = body.substr(0, end);
    std::replace(sentence.begin(), sentence.end(), '\n', ' ');
    if (sentence.size() > max_chars) sentence.resize(max_chars);
    return trim(sentence);
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v, int digits) {
    static const char* kHex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[v & 0xF];
        v >>= 4;
    }
    return out.substr(16 - static_cast<std::size_t>(digits));
}

std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme = url.find("://");
    auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string path = url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, path_start), path};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError(path, "cannot write file");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace modernize::text
