#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "corpus/corpus_io.hpp"
#include "corpus/lexicon.hpp"
#include "corpus/tokenizer.hpp"

namespace adaptlm::corpus {

// Relative weights of the sentence templates of the synthetic language.
struct TemplateMix {
  double transitive = 0;        // the ADJ AGENT REGION_VERB the MOD OBJECT .
  double about_main = 0;        // the ADJ AGENT VERB about the TOPIC .
  double about_and = 0;         // ... about the TOPIC and REGION_VERB the OBJECT .
  double full_relative = 0;     // the ADJ AGENT who were VERB about the TOPIC REGION_VERB the MOD OBJECT .
  double reduced_relative = 0;  // as above without "who were"
  double po_dative = 0;
  double do_dative = 0;
  double names = 0;
  double genre = 0;
  double intransitive = 0;

  // Reduced relatives absent and double objects rare next to prepositional
  // datives. Base training text and experiment fillers both follow this mix.
  static TemplateMix background();
};

class SyntheticLanguage {
 public:
  explicit SyntheticLanguage(const Lexicon& lexicon = default_lexicon()) : lex_(&lexicon) {}

  Words sample(const TemplateMix& mix, std::mt19937_64& rng) const;
  Words sample_genre(const GenreTheme& genre, std::mt19937_64& rng) const;
  std::vector<Words> sample_many(const TemplateMix& mix, std::size_t n, std::uint64_t seed) const;
  const Lexicon& lexicon() const { return *lex_; }

 private:
  const Lexicon* lex_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::size_t uniform_index(std::size_t n, std::mt19937_64& rng);

// Background corpus in texts of `sentences_per_text` sentences, genre "background".
Corpus background_corpus(std::size_t sentences, std::uint64_t seed, std::size_t sentences_per_text = 50);

// Texts where `genre_share` of the sentences come from the genre's theme and
// the rest from the background mix.
Corpus genre_corpus(const std::vector<std::string>& genres, std::size_t texts_per_genre,
                    std::size_t sentences_per_text, double genre_share, std::uint64_t seed);

// Texts that each revolve around a small cast of names, objects and verbs.
Corpus text_specific_corpus(std::size_t texts, std::size_t sentences_per_text, std::uint64_t seed);

// Every sentence is `cycle` repeated `repeats` times.
Corpus cyclic_corpus(const Words& cycle, std::size_t repeats, std::size_t sentences);

}  // namespace adaptlm::corpus
