#include "corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "error.hpp"

namespace adaptlm::corpus {

Vocabulary Vocabulary::build(const std::vector<Words>& sentences, std::size_t min_count) {
  if (min_count < 1) fail(ErrorKind::usage, "min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : sentences) {
    for (const auto& w : s) {
      ++counts[w];
      ++total;
    }
  }
  if (total == 0) fail(ErrorKind::invalid_argument, "cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_count && w != kUnkToken && w != kBosToken && w != kEosToken) kept.emplace_back(w, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{kUnkToken, kBosToken, kEosToken};
  for (auto& [w, c] : kept) tokens.push_back(w);
  return from_tokens(std::move(tokens), min_count);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t min_count) {
  if (tokens.size() < kReservedCount || tokens[kUnkId] != kUnkToken || tokens[kBosId] != kBosToken ||
      tokens[kEosId] != kEosToken) {
    fail(ErrorKind::format, "vocabulary must start with the reserved tokens <unk> <s> </s>");
  }
  Vocabulary v;
  v.min_count_ = min_count;
  std::string digest_input;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) fail(ErrorKind::format, "vocabulary contains an empty token at id " + std::to_string(i));
    auto [it, inserted] = v.ids_.emplace(tokens[i], static_cast<TokenId>(i));
    if (!inserted) fail(ErrorKind::format, "vocabulary token '" + tokens[i] + "' appears twice");
    digest_input += tokens[i];
    digest_input.push_back('\n');
  }
  v.tokens_ = std::move(tokens);
  v.fingerprint_ = sha256(digest_input);
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) fail(ErrorKind::invalid_argument, "token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(const Words& words) const {
  std::vector<TokenId> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(id(w));
  return out;
}

std::vector<std::vector<TokenId>> Vocabulary::encode_all(const std::vector<Words>& sentences) const {
  std::vector<std::vector<TokenId>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(encode(s));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write vocabulary " + path.string());
  out << "#adaptlm-vocab v1 min_count=" << min_count_ << '\n';
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) fail(ErrorKind::io, "short write to vocabulary " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open vocabulary " + path.string());
  std::string header;
  std::getline(in, header);
  const std::string prefix = "#adaptlm-vocab v1 min_count=";
  if (header.rfind(prefix, 0) != 0) fail(ErrorKind::format, path.string() + ": missing vocabulary header");
  std::size_t min_count = 0;
  try {
    min_count = std::stoul(header.substr(prefix.size()));
  } catch (const std::exception&) {
    fail(ErrorKind::format, path.string() + ": bad min_count in vocabulary header");
  }
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return from_tokens(std::move(tokens), min_count);
}

}  // namespace adaptlm::corpus
