#include "analysis/surprisal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <charconv>
#include <sstream>

#include "error.hpp"

namespace adaptlm::analysis {

const char* const kRecordsHeader =
    "text_id\tsentence_index\ttoken_index\ttoken\tsurprisal\tword_length\tsentence_position\tis_unk\tis_eos\t"
    "condition\tpair_id\tin_region";

double surprisal_from_logprob(double logprob, bool bits) {
  if (logprob > 0.0) fail(ErrorKind::invalid_argument, "log-probability must be <= 0, got " + std::to_string(logprob));
  const double nats = -logprob;
  return bits ? nats / kLn2 : nats;
}

std::size_t word_length(std::string_view token) {
  if (token == kEosToken) return 0;
  std::size_t n = 0;
  for (unsigned char c : token) n += (c & 0xC0) != 0x80;
  return n;
}

double perplexity_from_nll(std::span<const double> nll) {
  if (nll.empty()) fail(ErrorKind::invalid_argument, "perplexity of an empty stream");
  double total = 0.0;
  for (double v : nll) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    total += v;
  }
  return std::exp(total / static_cast<double>(nll.size()));
}

double perplexity(std::span<const SurprisalRecord> records) {
  std::vector<double> nll;
  nll.reserve(records.size());
  for (const auto& r : records) nll.push_back(r.surprisal);
  return perplexity_from_nll(nll);
}

std::vector<SurprisalRecord> make_records(const SentenceContext& context, std::span<const TokenId> ids,
                                          std::span<const double> target_log_probs,
                                          const corpus::Vocabulary& vocab) {
  if (target_log_probs.size() != ids.size() + 1) {
    fail(ErrorKind::shape, "make_records: " + std::to_string(target_log_probs.size()) + " scores for " +
                               std::to_string(ids.size()) + " tokens plus </s>");
  }
  const auto* item = context.item;
  if (item && item->tokens.size() != ids.size()) {
    fail(ErrorKind::data_invariant, "make_records: stimulus tokens do not match the encoded sentence");
  }
  std::vector<SurprisalRecord> out;
  out.reserve(target_log_probs.size());
  for (std::size_t i = 0; i <= ids.size(); ++i) {
    SurprisalRecord r;
    r.text_id = context.text_id;
    r.sentence_index = context.sentence_index;
    r.token_index = context.first_token_index + i;
    const bool eos = i == ids.size();
    r.token = eos ? std::string(kEosToken) : (item ? item->tokens[i] : vocab.token(ids[i]));
    // A diverged model can produce NaN log-probabilities; keep them as +inf.
    const double lp = target_log_probs[i];
    r.surprisal = std::isfinite(lp) ? surprisal_from_logprob(std::min(lp, 0.0))
                                    : std::numeric_limits<double>::infinity();
    r.word_length = word_length(r.token);
    r.sentence_position = i + 1;
    r.is_unk = !eos && ids[i] == kUnkId;
    r.is_eos = eos;
    if (item) {
      r.condition = corpus::to_string(item->condition);
      r.pair_id = item->pair_id;
      r.in_region = !eos && i >= item->region_start && i < item->region_start + item->region_len;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

std::string format_records_tsv(std::span<const SurprisalRecord> records) {
  std::ostringstream out;
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << r.text_id << '\t' << r.sentence_index << '\t' << r.token_index << '\t' << r.token << '\t'
        << format_number(r.surprisal) << '\t' << r.word_length << '\t' << r.sentence_position << '\t'
        << int(r.is_unk) << '\t' << int(r.is_eos) << '\t' << (r.condition.empty() ? "-" : r.condition) << '\t'
        << r.pair_id << '\t' << int(r.in_region) << '\n';
  }
  return out.str();
}

std::vector<SurprisalRecord> parse_records_tsv(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) fail(ErrorKind::format, "records TSV: unexpected header");
  std::vector<SurprisalRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1) {
      f.push_back(line.substr(start, pos - start));
    }
    f.push_back(line.substr(start));
    if (f.size() != 12) fail(ErrorKind::format, "records TSV line " + std::to_string(lineno) + ": expected 12 fields");
    try {
      SurprisalRecord r;
      r.text_id = f[0];
      r.sentence_index = std::stoul(f[1]);
      r.token_index = std::stoul(f[2]);
      r.token = f[3];
      r.surprisal = f[4] == "inf" ? std::numeric_limits<double>::infinity() : std::stod(f[4]);
      r.word_length = std::stoul(f[5]);
      r.sentence_position = std::stoul(f[6]);
      r.is_unk = f[7] == "1";
      r.is_eos = f[8] == "1";
      r.condition = f[9] == "-" ? "" : f[9];
      r.pair_id = std::stoi(f[10]);
      r.in_region = f[11] == "1";
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      fail(ErrorKind::format, "records TSV line " + std::to_string(lineno) + ": bad numeric field");
    }
  }
  return out;
}

}  // namespace adaptlm::analysis
