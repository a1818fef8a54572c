#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "corpus/tokenizer.hpp"

namespace adaptlm::corpus {

struct Text {
  std::string id;
  std::string genre;
  std::vector<Words> sentences;
};

struct Corpus {
  std::vector<Text> texts;

  std::vector<std::string> genres() const;  // in first-appearance order
  std::vector<Words> all_sentences() const;
  std::vector<const Text*> texts_in(std::string_view genre) const;
  std::size_t sentence_count() const;
};

// Corpus text format:
//   #genre: <label>   applies to every following text until changed
//   #text: <id>       starts a new text
//   <blank line>      ends the current text
//   any other line    one sentence, split with tokenize_words()
// Other lines starting with '#' are comments. Texts without an id get
// "text<N>"; texts without a genre get "default".
Corpus parse_corpus(std::string_view contents);
Corpus read_corpus(const std::filesystem::path& path);
std::string format_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace adaptlm::corpus
