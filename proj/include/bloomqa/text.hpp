#ifndef BLOOMQA_TEXT_HPP
#define BLOOMQA_TEXT_HPP

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bloomqa {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Whitespace-delimited tokens after trimming; hyphenated compounds count
// as one word.
inline int word_count(std::string_view s) {
  int n = 0;
  bool in_word = false;
  for (char c : s) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

// Canonical text form used for hashing and field comparison: lowercase,
// whitespace collapsed to single spaces, punctuation stripped at word edges.
inline std::string normalize_text(std::string_view s) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&]() {
    std::size_t b = 0, e = cur.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) words.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  flush();
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

// FNV-1a, 64 bit. Platform-independent; used for content dedup and for
// keying the gateway fixture store.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string content_hash(std::string_view text) {
  return hex64(fnv1a64(normalize_text(text)));
}

// Case-insensitive phrase match anchored at word boundaries, so "support"
// blocks "support" but not "supportive".
inline bool contains_phrase(std::string_view text, std::string_view phrase) {
  std::string t = to_lower(text);
  std::string p = to_lower(std::string(trim(phrase)));
  if (p.empty()) return false;
  auto is_word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'';
  };
  std::size_t pos = 0;
  while ((pos = t.find(p, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(t[pos - 1]);
    std::size_t end = pos + p.size();
    bool right_ok = end >= t.size() || !is_word_char(t[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

// Sentence count: terminal punctuation (. ! ?) followed by whitespace or
// end of string.
inline int sentence_count(std::string_view s) {
  int n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.' || c == '!' || c == '?') {
      if (i + 1 >= s.size() || std::isspace(static_cast<unsigned char>(s[i + 1]))) ++n;
    }
  }
  if (n == 0 && !trim(s).empty()) n = 1;
  return n;
}

}  // namespace bloomqa

#endif  // BLOOMQA_TEXT_HPP
