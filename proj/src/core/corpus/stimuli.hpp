#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "corpus/lexicon.hpp"
#include "corpus/tokenizer.hpp"
#include "corpus/vocabulary.hpp"

namespace adaptlm::corpus {

enum class Condition { filler, ambiguous, unambiguous, double_object, prepositional_object };

const char* to_string(Condition c);
Condition condition_from_string(std::string_view s);
// ambiguous <-> unambiguous, double_object <-> prepositional_object.
Condition counterpart(Condition c);

struct StimulusItem {
  int pair_id = -1;  // filler index for fillers
  Condition condition = Condition::filler;
  Words tokens;
  std::size_t region_start = 0;
  std::size_t region_len = 0;

  bool is_filler() const { return condition == Condition::filler; }
  Words region() const;
  friend bool operator==(const StimulusItem&, const StimulusItem&) = default;
};

struct StimulusList {
  int list_id = 0;  // 1-based
  std::vector<StimulusItem> trials;  // presentation order
};

inline constexpr std::size_t kGardenPathRegionLength = 3;

// Pairs come back adjacent: (ambiguous, unambiguous) for each pair_id. No
// region verb or region modifier is reused across pairs.
std::vector<StimulusItem> generate_garden_path_items(const GardenPathPools& pools, std::size_t n_pairs,
                                                     std::uint64_t seed);

// Template-grammar check for one garden-path item; throws Error(data_invariant).
void validate_garden_path_item(const StimulusItem& item, const GardenPathPools& pools);

// Pairs come back adjacent: (double_object, prepositional_object). With
// `disjoint_halves`, pairs in the second half draw every content word from
// pool halves the first half never touches.
std::vector<StimulusItem> generate_dative_items(const DativePools& pools, std::size_t n_pairs, std::uint64_t seed,
                                                bool disjoint_halves = true);

// Agent, verb, theme, recipient of a dative item.
Words dative_content_words(const StimulusItem& item);

std::vector<StimulusItem> make_fillers(const std::vector<Words>& sentences);

// Sixteen lists: four random orderings, the same four with every critical
// condition flipped, then all eight reversed. Fillers are interleaved
// uniformly at random.
std::vector<StimulusList> compile_stimulus_lists(const std::vector<StimulusItem>& criticals,
                                                 const std::vector<StimulusItem>& fillers, std::uint64_t seed);

// One condition per pair and every filler present; throws naming the list.
void validate_stimulus_list(const StimulusList& list, std::size_t n_pairs, std::size_t n_fillers);

// Every stimulus token must be in-vocabulary; throws naming the first miss.
void check_in_vocabulary(const std::vector<StimulusItem>& items, const Vocabulary& vocab);

struct DativeMaterials {
  Condition adapted = Condition::double_object;
  std::vector<Words> adaptation_stream;    // criticals shuffled into fillers
  std::vector<Words> shared_lexicon_test;  // counterparts of the adapted criticals
  std::vector<Words> shared_syntax_test;   // adapted construction, new content words
};

// The first `n_adapt` pairs feed the adaptation stream; the next `n_new`
// pairs supply the shared-syntax test set and must share no content word
// with them.
DativeMaterials assemble_dative_adaptation_set(const std::vector<StimulusItem>& pairs,
                                               const std::vector<Words>& fillers, Condition which,
                                               std::uint64_t seed, std::size_t n_adapt = 100,
                                               std::size_t n_new = 100);

// TSV with header: list_id trial_index pair_id condition region_start region_len tokens
std::string format_stimulus_lists_tsv(const std::vector<StimulusList>& lists);
std::vector<StimulusList> parse_stimulus_lists_tsv(std::string_view contents);

}  // namespace adaptlm::corpus
