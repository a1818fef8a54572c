#include "corpus/stimuli.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "corpus/synthetic.hpp"
#include "error.hpp"

namespace adaptlm::corpus {

const char* to_string(Condition c) {
  switch (c) {
    case Condition::filler: return "filler";
    case Condition::ambiguous: return "ambiguous";
    case Condition::unambiguous: return "unambiguous";
    case Condition::double_object: return "DO";
    case Condition::prepositional_object: return "PO";
  }
  return "?";
}

Condition condition_from_string(std::string_view s) {
  if (s == "filler") return Condition::filler;
  if (s == "ambiguous") return Condition::ambiguous;
  if (s == "unambiguous") return Condition::unambiguous;
  if (s == "DO") return Condition::double_object;
  if (s == "PO") return Condition::prepositional_object;
  fail(ErrorKind::format, "unknown condition '" + std::string(s) + "'");
}

Condition counterpart(Condition c) {
  switch (c) {
    case Condition::ambiguous: return Condition::unambiguous;
    case Condition::unambiguous: return Condition::ambiguous;
    case Condition::double_object: return Condition::prepositional_object;
    case Condition::prepositional_object: return Condition::double_object;
    case Condition::filler: break;
  }
  fail(ErrorKind::invalid_argument, "fillers have no counterpart condition");
}

Words StimulusItem::region() const {
  if (region_start + region_len > tokens.size()) {
    fail(ErrorKind::data_invariant, "critical region exceeds sentence length");
  }
  return Words(tokens.begin() + static_cast<std::ptrdiff_t>(region_start),
               tokens.begin() + static_cast<std::ptrdiff_t>(region_start + region_len));
}

namespace {

bool in(const Pool& pool, const std::string& w) { return std::find(pool.begin(), pool.end(), w) != pool.end(); }

template <typename T>
void shuffle_with(std::vector<T>& v, std::mt19937_64& rng) {
  // Fisher-Yates with rng() % n so the permutation is library-independent.
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(i, rng)]);
}

}  // namespace

std::vector<StimulusItem> generate_garden_path_items(const GardenPathPools& pools, std::size_t n_pairs,
                                                     std::uint64_t seed) {
  if (pools.region_verbs.size() < n_pairs || pools.region_modifiers.size() < n_pairs) {
    fail(ErrorKind::usage, "garden-path lexicon too small: " + std::to_string(n_pairs) + " pairs need as many region "
                           "verbs and modifiers (have " + std::to_string(pools.region_verbs.size()) + " and " +
                           std::to_string(pools.region_modifiers.size()) + ")");
  }
  for (const Pool* p : {&pools.adjectives, &pools.agents, &pools.about_verbs, &pools.topics, &pools.objects}) {
    if (p->empty()) fail(ErrorKind::usage, "garden-path lexicon has an empty pool");
  }
  std::mt19937_64 rng(seed);
  Pool verbs = pools.region_verbs;
  Pool mods = pools.region_modifiers;
  shuffle_with(verbs, rng);
  shuffle_with(mods, rng);
  auto pick = [&](const Pool& p) { return p[uniform_index(p.size(), rng)]; };

  std::vector<StimulusItem> out;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const std::string adj = pick(pools.adjectives), agent = pick(pools.agents), verb = pick(pools.about_verbs),
                      topic = pick(pools.topics), obj = pick(pools.objects);
    StimulusItem amb;
    amb.pair_id = static_cast<int>(i);
    amb.condition = Condition::ambiguous;
    amb.tokens = {"the", adj, agent, verb, "about", "the", topic, verbs[i], "the", mods[i], obj, "."};
    amb.region_start = 7;
    amb.region_len = kGardenPathRegionLength;
    StimulusItem unamb = amb;
    unamb.condition = Condition::unambiguous;
    unamb.tokens.insert(unamb.tokens.begin() + 3, {"who", "were"});
    unamb.region_start = 9;
    out.push_back(std::move(amb));
    out.push_back(std::move(unamb));
  }
  return out;
}

void validate_garden_path_item(const StimulusItem& item, const GardenPathPools& pools) {
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::data_invariant, "garden-path item " + std::to_string(item.pair_id) + " (" +
                                        to_string(item.condition) + "): " + why + ": '" + join(item.tokens) + "'");
  };
  const bool unamb = item.condition == Condition::unambiguous;
  if (!unamb && item.condition != Condition::ambiguous) bad("not a garden-path condition");
  const auto& t = item.tokens;
  const std::size_t off = unamb ? 2 : 0;
  if (t.size() != 12 + off) bad("wrong length");
  if (t[0] != "the" || !in(pools.adjectives, t[1]) || !in(pools.agents, t[2])) bad("malformed subject");
  if (unamb && (t[3] != "who" || t[4] != "were")) bad("missing 'who were'");
  if (!in(pools.about_verbs, t[3 + off]) || t[4 + off] != "about" || t[5 + off] != "the" ||
      !in(pools.topics, t[6 + off])) {
    bad("malformed relative clause");
  }
  if (!in(pools.region_verbs, t[7 + off]) || t[8 + off] != "the" || !in(pools.region_modifiers, t[9 + off]) ||
      !in(pools.objects, t[10 + off]) || t[11 + off] != ".") {
    bad("malformed main clause");
  }
  if (item.region_start != 7 + off || item.region_len != kGardenPathRegionLength) bad("wrong critical region");
}

std::vector<StimulusItem> generate_dative_items(const DativePools& pools, std::size_t n_pairs, std::uint64_t seed,
                                                bool disjoint_halves) {
  std::mt19937_64 rng(seed);
  auto half = [&](const Pool& p, int which) {
    if (!disjoint_halves) return p;
    const auto mid = p.size() / 2;
    return which == 0 ? Pool(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(mid))
                      : Pool(p.begin() + static_cast<std::ptrdiff_t>(mid), p.end());
  };
  std::vector<StimulusItem> out;
  std::set<std::array<std::string, 4>> seen;
  const std::size_t first_half = disjoint_halves ? n_pairs / 2 : n_pairs;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const int which = i < first_half ? 0 : 1;
    const Pool agents = half(pools.agents, which), verbs = half(pools.verbs, which), themes = half(pools.themes, which),
               recipients = half(pools.recipients, which);
    for (const Pool* p : {&agents, &verbs, &themes, &recipients}) {
      if (p->empty()) fail(ErrorKind::usage, "dative lexicon has an empty pool");
    }
    const double combos = static_cast<double>(agents.size()) * verbs.size() * themes.size() * recipients.size();
    if (combos < static_cast<double>(which == 0 ? first_half : n_pairs - first_half)) {
      fail(ErrorKind::usage, "dative lexicon too small for " + std::to_string(n_pairs) + " unique pairs");
    }
    std::array<std::string, 4> tuple;
    do {
      tuple = {agents[uniform_index(agents.size(), rng)], verbs[uniform_index(verbs.size(), rng)],
               themes[uniform_index(themes.size(), rng)], recipients[uniform_index(recipients.size(), rng)]};
    } while (!seen.insert(tuple).second);
    const auto& [agent, verb, theme, recipient] = tuple;
    StimulusItem dobj;
    dobj.pair_id = static_cast<int>(i);
    dobj.condition = Condition::double_object;
    dobj.tokens = {"the", agent, verb, "the", recipient, "the", theme, "."};
    dobj.region_start = 3;
    dobj.region_len = 4;
    StimulusItem pobj;
    pobj.pair_id = static_cast<int>(i);
    pobj.condition = Condition::prepositional_object;
    pobj.tokens = {"the", agent, verb, "the", theme, "to", "the", recipient, "."};
    pobj.region_start = 3;
    pobj.region_len = 5;
    out.push_back(std::move(dobj));
    out.push_back(std::move(pobj));
  }
  return out;
}

Words dative_content_words(const StimulusItem& item) {
  const auto& t = item.tokens;
  if (item.condition == Condition::double_object && t.size() == 8) return {t[1], t[2], t[6], t[4]};
  if (item.condition == Condition::prepositional_object && t.size() == 9) return {t[1], t[2], t[4], t[7]};
  fail(ErrorKind::data_invariant, "not a well-formed dative item: '" + join(t) + "'");
}

std::vector<StimulusItem> make_fillers(const std::vector<Words>& sentences) {
  std::vector<StimulusItem> out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    StimulusItem f;
    f.pair_id = static_cast<int>(i);
    f.condition = Condition::filler;
    f.tokens = sentences[i];
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

// pair_id -> {first-condition item, second-condition item}
std::map<int, std::pair<const StimulusItem*, const StimulusItem*>> index_pairs(
    const std::vector<StimulusItem>& criticals) {
  std::map<int, std::pair<const StimulusItem*, const StimulusItem*>> pairs;
  for (const auto& item : criticals) {
    if (item.is_filler()) fail(ErrorKind::data_invariant, "filler passed as a critical item");
    auto& slot = pairs[item.pair_id];
    const bool first = item.condition == Condition::ambiguous || item.condition == Condition::double_object;
    auto& dst = first ? slot.first : slot.second;
    if (dst) {
      fail(ErrorKind::data_invariant, "pair " + std::to_string(item.pair_id) + " has two " +
                                          to_string(item.condition) + " items");
    }
    dst = &item;
  }
  for (const auto& [id, p] : pairs) {
    if (!p.first || !p.second || counterpart(p.first->condition) != p.second->condition) {
      fail(ErrorKind::data_invariant, "critical item " + std::to_string(id) + " is unpaired");
    }
  }
  return pairs;
}

}  // namespace

std::vector<StimulusList> compile_stimulus_lists(const std::vector<StimulusItem>& criticals,
                                                 const std::vector<StimulusItem>& fillers, std::uint64_t seed) {
  if (fillers.empty()) fail(ErrorKind::data_invariant, "compile_stimulus_lists: no fillers");
  for (const auto& f : fillers) {
    if (!f.is_filler()) fail(ErrorKind::data_invariant, "non-filler item passed as a filler");
  }
  const auto pairs = index_pairs(criticals);
  if (pairs.empty()) fail(ErrorKind::data_invariant, "compile_stimulus_lists: no critical items");
  std::vector<const std::pair<const StimulusItem*, const StimulusItem*>*> pair_refs;
  for (const auto& [id, p] : pairs) pair_refs.push_back(&p);

  constexpr std::size_t kBase = 4;
  std::vector<StimulusList> lists(16);
  for (std::size_t k = 0; k < kBase; ++k) {
    std::mt19937_64 rng(derive_seed(seed, k));
    // Slot i < n_pairs is a critical, the rest index fillers.
    std::vector<std::size_t> slots(pair_refs.size() + fillers.size());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    shuffle_with(slots, rng);
    std::vector<bool> take_first(pair_refs.size());
    for (std::size_t i = 0; i < take_first.size(); ++i) take_first[i] = i < (take_first.size() + 1) / 2;
    shuffle_with(take_first, rng);

    for (int flip = 0; flip < 2; ++flip) {
      auto& list = lists[k + static_cast<std::size_t>(flip) * kBase];
      list.list_id = static_cast<int>(k + static_cast<std::size_t>(flip) * kBase + 1);
      for (std::size_t s : slots) {
        if (s < pair_refs.size()) {
          const bool first = take_first[s] != static_cast<bool>(flip);
          list.trials.push_back(first ? *pair_refs[s]->first : *pair_refs[s]->second);
        } else {
          list.trials.push_back(fillers[s - pair_refs.size()]);
        }
      }
    }
  }
  for (std::size_t k = 0; k < 2 * kBase; ++k) {
    lists[k + 2 * kBase].list_id = static_cast<int>(k + 2 * kBase + 1);
    lists[k + 2 * kBase].trials.assign(lists[k].trials.rbegin(), lists[k].trials.rend());
  }
  for (const auto& l : lists) validate_stimulus_list(l, pairs.size(), fillers.size());
  return lists;
}

void validate_stimulus_list(const StimulusList& list, std::size_t n_pairs, std::size_t n_fillers) {
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::data_invariant, "stimulus list " + std::to_string(list.list_id) + ": " + why);
  };
  std::map<int, int> pair_seen;
  std::set<int> fillers_seen;
  for (const auto& t : list.trials) {
    if (t.is_filler()) {
      if (!fillers_seen.insert(t.pair_id).second) bad("filler " + std::to_string(t.pair_id) + " appears twice");
    } else if (++pair_seen[t.pair_id] > 1) {
      bad("pair " + std::to_string(t.pair_id) + " appears in more than one condition");
    }
    if (t.region_start + t.region_len > t.tokens.size()) bad("critical region out of bounds");
  }
  if (pair_seen.size() != n_pairs) {
    bad(std::to_string(pair_seen.size()) + " critical pairs present, expected " + std::to_string(n_pairs));
  }
  if (fillers_seen.size() != n_fillers) {
    bad(std::to_string(fillers_seen.size()) + " fillers present, expected " + std::to_string(n_fillers));
  }
}

void check_in_vocabulary(const std::vector<StimulusItem>& items, const Vocabulary& vocab) {
  for (const auto& item : items) {
    for (const auto& w : item.tokens) {
      if (!vocab.contains(w)) {
        fail(ErrorKind::data_invariant, "stimulus word '" + w + "' is out of vocabulary (item " +
                                            std::to_string(item.pair_id) + ", " + to_string(item.condition) + ")");
      }
    }
  }
}

DativeMaterials assemble_dative_adaptation_set(const std::vector<StimulusItem>& pairs,
                                               const std::vector<Words>& fillers, Condition which,
                                               std::uint64_t seed, std::size_t n_adapt, std::size_t n_new) {
  if (which != Condition::double_object && which != Condition::prepositional_object) {
    fail(ErrorKind::usage, "dative adaptation must target DO or PO");
  }
  const auto index = index_pairs(pairs);
  if (index.size() < n_adapt + n_new) {
    fail(ErrorKind::data_invariant, "need " + std::to_string(n_adapt + n_new) + " dative pairs, have " +
                                        std::to_string(index.size()));
  }
  std::vector<const std::pair<const StimulusItem*, const StimulusItem*>*> ordered;
  for (const auto& [id, p] : index) ordered.push_back(&p);
  auto member = [&](const auto* p, Condition c) { return p->first->condition == c ? p->first : p->second; };

  DativeMaterials m;
  m.adapted = which;
  std::set<std::string> adapted_words;
  for (std::size_t i = 0; i < n_adapt; ++i) {
    const auto* item = member(ordered[i], which);
    for (auto& w : dative_content_words(*item)) adapted_words.insert(w);
    m.adaptation_stream.push_back(item->tokens);
    m.shared_lexicon_test.push_back(member(ordered[i], counterpart(which))->tokens);
  }
  for (std::size_t i = n_adapt; i < n_adapt + n_new; ++i) {
    const auto* item = member(ordered[i], which);
    for (auto& w : dative_content_words(*item)) {
      if (adapted_words.contains(w)) {
        fail(ErrorKind::data_invariant, "new dative pair " + std::to_string(item->pair_id) + " shares content word '" +
                                            w + "' with the adaptation pairs");
      }
    }
    m.shared_syntax_test.push_back(item->tokens);
  }
  m.adaptation_stream.insert(m.adaptation_stream.end(), fillers.begin(), fillers.end());
  std::mt19937_64 rng(seed);
  shuffle_with(m.adaptation_stream, rng);
  return m;
}

std::string format_stimulus_lists_tsv(const std::vector<StimulusList>& lists) {
  std::ostringstream out;
  out << "list_id\ttrial_index\tpair_id\tcondition\tregion_start\tregion_len\ttokens\n";
  for (const auto& l : lists) {
    for (std::size_t i = 0; i < l.trials.size(); ++i) {
      const auto& t = l.trials[i];
      out << l.list_id << '\t' << i << '\t' << t.pair_id << '\t' << to_string(t.condition) << '\t' << t.region_start
          << '\t' << t.region_len << '\t' << join(t.tokens) << '\n';
    }
  }
  return out.str();
}

std::vector<StimulusList> parse_stimulus_lists_tsv(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  std::string line;
  if (!std::getline(in, line) || line != "list_id\ttrial_index\tpair_id\tcondition\tregion_start\tregion_len\ttokens") {
    fail(ErrorKind::format, "stimulus TSV: missing or unexpected header");
  }
  std::vector<StimulusList> lists;
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
    if (f.size() != 7) fail(ErrorKind::format, "stimulus TSV line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      const int list_id = std::stoi(f[0]);
      const std::size_t trial = std::stoul(f[1]);
      if (lists.empty() || lists.back().list_id != list_id) lists.push_back(StimulusList{list_id, {}});
      auto& l = lists.back();
      if (trial != l.trials.size()) {
        fail(ErrorKind::format, "stimulus TSV line " + std::to_string(lineno) + ": trials out of order");
      }
      StimulusItem item;
      item.pair_id = std::stoi(f[2]);
      item.condition = condition_from_string(f[3]);
      item.region_start = std::stoul(f[4]);
      item.region_len = std::stoul(f[5]);
      item.tokens = tokenize_words(f[6]);
      l.trials.push_back(std::move(item));
    } catch (const std::logic_error&) {
      fail(ErrorKind::format, "stimulus TSV line " + std::to_string(lineno) + ": bad numeric field");
    }
  }
  return lists;
}

}  // namespace adaptlm::corpus
