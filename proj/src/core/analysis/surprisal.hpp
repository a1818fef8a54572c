#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpus/stimuli.hpp"
#include "corpus/vocabulary.hpp"
#include "token.hpp"

namespace adaptlm::analysis {

struct SurprisalRecord {
  std::string text_id;
  std::size_t sentence_index = 0;     // within the text
  std::size_t token_index = 0;        // running index within the text
  std::string token;
  double surprisal = 0.0;             // nats
  std::size_t word_length = 0;        // code points; 0 for </s>
  std::size_t sentence_position = 0;  // 1-based position within the sentence
  bool is_unk = false;
  bool is_eos = false;
  // Stimulus annotations; empty condition and pair_id -1 outside stimuli.
  std::string condition;
  int pair_id = -1;
  bool in_region = false;

  friend bool operator==(const SurprisalRecord&, const SurprisalRecord&) = default;
};

inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

// -logprob in nats, or bits with `bits`. Throws Error(invalid_argument) on a
// positive log-probability.
double surprisal_from_logprob(double logprob, bool bits = false);

std::size_t word_length(std::string_view token);

// exp of the token-weighted mean NLL; +inf if any value is non-finite.
// Throws Error(invalid_argument) on an empty stream.
double perplexity(std::span<const SurprisalRecord> records);
double perplexity_from_nll(std::span<const double> nll);

struct SentenceContext {
  std::string text_id;
  std::size_t sentence_index = 0;
  std::size_t first_token_index = 0;
  const corpus::StimulusItem* item = nullptr;
};

// One record per target (each word, then </s>) from the per-target
// log-probabilities of a forward pass.
std::vector<SurprisalRecord> make_records(const SentenceContext& context, std::span<const TokenId> ids,
                                          std::span<const double> target_log_probs,
                                          const corpus::Vocabulary& vocab);

// TSV with a header row; see format_records_tsv for the column order.
std::string format_records_tsv(std::span<const SurprisalRecord> records);
std::vector<SurprisalRecord> parse_records_tsv(std::string_view contents);
extern const char* const kRecordsHeader;

// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

}  // namespace adaptlm::analysis
