#include "corpus/tokenizer.hpp"

#include <cctype>

namespace adaptlm::corpus {

namespace {

constexpr std::string_view kLeading = "\"'([{";
constexpr std::string_view kTrailing = ".,!?;:\"')]}";
constexpr std::string_view kTerminal = ".!?";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string_view> chunks(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

struct Split {
  Words tokens;
  bool ends_with_terminal = false;
  bool starts_upper = false;
};

Split split_chunk(std::string_view chunk) {
  Split out;
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (begin < end && kLeading.find(chunk[begin]) != std::string_view::npos) ++begin;
  while (end > begin && kTrailing.find(chunk[end - 1]) != std::string_view::npos) --end;
  if (begin < chunk.size()) {
    const char first = chunk[begin];
    out.starts_upper = first >= 'A' && first <= 'Z';
  }
  for (std::size_t i = 0; i < begin; ++i) out.tokens.emplace_back(1, chunk[i]);
  if (end > begin) out.tokens.push_back(lower(chunk.substr(begin, end - begin)));
  for (std::size_t i = end; i < chunk.size(); ++i) {
    out.tokens.emplace_back(1, chunk[i]);
    if (kTerminal.find(chunk[i]) != std::string_view::npos) out.ends_with_terminal = true;
  }
  return out;
}

}  // namespace

Words tokenize_words(std::string_view line) {
  Words out;
  for (auto c : chunks(line)) {
    auto s = split_chunk(c);
    for (auto& t : s.tokens) out.push_back(std::move(t));
  }
  return out;
}

std::vector<Words> tokenize(std::string_view raw) {
  std::vector<Words> sentences;
  Words current;
  bool pending_boundary = false;
  for (auto c : chunks(raw)) {
    auto s = split_chunk(c);
    if (pending_boundary && s.starts_upper && !current.empty()) {
      sentences.push_back(std::move(current));
      current.clear();
    }
    for (auto& t : s.tokens) current.push_back(std::move(t));
    pending_boundary = s.ends_with_terminal;
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

std::string join(const Words& words, char sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(sep);
    out += words[i];
  }
  return out;
}

}  // namespace adaptlm::corpus
