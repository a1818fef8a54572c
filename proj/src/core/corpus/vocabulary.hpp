#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus/tokenizer.hpp"
#include "fingerprint.hpp"
#include "token.hpp"

namespace adaptlm::corpus {

// Token <-> id bijection. Ids 0..2 are <unk>, <s>, </s>; ordinary tokens
// follow in descending frequency, ties broken lexically.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<Words>& sentences, std::size_t min_count);
  // `tokens` lists every token in id order, reserved ones included.
  static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t min_count);

  TokenId id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t min_count() const noexcept { return min_count_; }
  const Fingerprint& fingerprint() const noexcept { return fingerprint_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<TokenId> encode(const Words& words) const;
  std::vector<std::vector<TokenId>> encode_all(const std::vector<Words>& sentences) const;

  // Text file: a "#adaptlm-vocab v1 min_count=N" header, then one token per
  // line in id order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::size_t min_count_ = 1;
  Fingerprint fingerprint_{};
};

}  // namespace adaptlm::corpus
