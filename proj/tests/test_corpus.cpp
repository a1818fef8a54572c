#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "corpus/corpus_io.hpp"
#include "corpus/lexicon.hpp"
#include "corpus/stimuli.hpp"
#include "corpus/synthetic.hpp"
#include "corpus/tokenizer.hpp"
#include "corpus/vocabulary.hpp"
#include "error.hpp"
#include "test_util.hpp"

using namespace adaptlm;
using namespace adaptlm::corpus;

namespace {

void check_kind(const auto& fn, ErrorKind kind) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

std::multiset<std::string> multiset_of(const Words& w) { return {w.begin(), w.end()}; }

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("tokenizer rules") {
    CHECK(tokenize_words("The dog ran.") == Words{"the", "dog", "ran", "."});
    CHECK(tokenize("").empty());
    CHECK(tokenize_words("\"Well,\" (she) said don't 3.5!") ==
          Words{"\"", "well", ",", "\"", "(", "she", ")", "said", "don't", "3.5", "!"});
    const auto s = tokenize("It rained. Then it stopped! ok? Fine");
    REQUIRE(s.size() == 3);
    CHECK(s[0] == Words{"it", "rained", "."});
    CHECK(s[1] == Words{"then", "it", "stopped", "!", "ok", "?"});
    CHECK(s[2] == Words{"fine"});
  }

  TEST_CASE("tokenizing joined tokens is the identity") {
    const auto sample = SyntheticLanguage().sample_many(TemplateMix::background(), 1000, 77);
    for (const auto& s : sample) CHECK(tokenize_words(join(s)) == s);
  }

  TEST_CASE("vocabulary thresholds, ordering and fingerprint") {
    const std::vector<Words> corpus{{"b", "a", "a"}, {"c", "a", "b"}};
    const auto v1 = Vocabulary::build(corpus, 1);
    CHECK(v1.tokens() == std::vector<std::string>{"<unk>", "<s>", "</s>", "a", "b", "c"});
    for (const auto& s : corpus)
      for (auto id : v1.encode(s)) CHECK(id != kUnkId);
    const auto v2 = Vocabulary::build({{"a", "a", "b"}}, 2);
    CHECK(v2.size() == 4);
    CHECK(v2.id("b") == kUnkId);
    CHECK(Vocabulary::build(corpus, 1).fingerprint() == v1.fingerprint());
    CHECK(v2.fingerprint() != v1.fingerprint());
    CHECK_THROWS_AS(Vocabulary::build({}, 1), Error);
    CHECK_THROWS_AS(Vocabulary::build(corpus, 0), Error);
    for (std::size_t i = 0; i < v1.size(); ++i) CHECK(v1.id(v1.token(static_cast<TokenId>(i))) == i);
  }

  TEST_CASE("vocabulary save and load keeps ids and fingerprint") {
    testutil::TempDir dir;
    const auto v = Vocabulary::build(SyntheticLanguage().sample_many(TemplateMix::background(), 200, 3), 2);
    v.save(dir / "v.txt");
    const auto back = Vocabulary::load(dir / "v.txt");
    CHECK(back.tokens() == v.tokens());
    CHECK(back.fingerprint() == v.fingerprint());
    CHECK(back.min_count() == 2);
    CHECK(back.id("<s>") == kBosId);
    testutil::spit(dir / "bad.txt", "no header\n");
    CHECK_THROWS_AS(Vocabulary::load(dir / "bad.txt"), Error);
    CHECK_THROWS_AS(Vocabulary::from_tokens({"<unk>", "<s>", "</s>", "x", "x"}, 1), Error);
  }

  TEST_CASE("corpus format round trip") {
    const auto c = genre_corpus({"fairy", "science"}, 2, 5, 0.7, 9);
    const auto text = format_corpus(c);
    const auto back = parse_corpus(text);
    REQUIRE(back.texts.size() == c.texts.size());
    for (std::size_t i = 0; i < c.texts.size(); ++i) {
      CHECK(back.texts[i].id == c.texts[i].id);
      CHECK(back.texts[i].genre == c.texts[i].genre);
      CHECK(back.texts[i].sentences == c.texts[i].sentences);
    }
    CHECK(back.genres() == std::vector<std::string>{"fairy", "science"});
    const auto plain = parse_corpus("One line.\n\nAnother text here.\n");
    REQUIRE(plain.texts.size() == 2);
    CHECK(plain.texts[0].genre == "default");
    CHECK(plain.texts[1].id == "text2");
  }

  TEST_CASE("synthetic generators are seed-deterministic") {
    CHECK(format_corpus(background_corpus(300, 4)) == format_corpus(background_corpus(300, 4)));
    CHECK(format_corpus(background_corpus(300, 4)) != format_corpus(background_corpus(300, 5)));
    const auto ts = text_specific_corpus(3, 10, 2);
    CHECK(ts.texts.size() == 3);
    for (const auto& t : ts.texts) CHECK(t.sentences.size() == 10);
    const auto cyc = cyclic_corpus({"a", "b", "c"}, 2, 5);
    CHECK(cyc.sentence_count() == 5);
    CHECK(cyc.texts.front().sentences.front() == Words{"a", "b", "c", "a", "b", "c"});
  }

  TEST_CASE("background corpus contains no reduced relatives") {
    // Without "who were", "VERB about the TOPIC" may only continue with "and" or end.
    std::size_t main_clauses = 0;
    for (const auto& s : background_corpus(3000, 8).all_sentences()) {
      const auto about = std::find(s.begin(), s.end(), "about");
      if (about == s.end() || about - s.begin() < 2 || about + 3 >= s.end()) continue;
      if (*(about - 2) == "were") continue;
      ++main_clauses;
      CHECK((*(about + 3) == "and" || *(about + 3) == "."));
    }
    CHECK(main_clauses > 100);
  }

  TEST_CASE("garden-path items") {
    const auto& pools = default_lexicon().garden_path;
    const auto items = generate_garden_path_items(pools, 40, 13);
    REQUIRE(items.size() == 80);
    std::set<Words> regions;
    for (std::size_t i = 0; i < items.size(); i += 2) {
      const auto& amb = items[i];
      const auto& un = items[i + 1];
      CHECK(amb.condition == Condition::ambiguous);
      CHECK(un.condition == Condition::unambiguous);
      CHECK(amb.pair_id == un.pair_id);
      CHECK(amb.region_len == kGardenPathRegionLength);
      CHECK(amb.region() == un.region());
      CHECK(un.tokens.size() == amb.tokens.size() + 2);
      // Identical outside the "who were" site.
      Words stripped = un.tokens;
      const auto it = std::find(stripped.begin(), stripped.end(), "who");
      REQUIRE(it != stripped.end());
      CHECK(*(it + 1) == "were");
      stripped.erase(it, it + 2);
      CHECK(stripped == amb.tokens);
      validate_garden_path_item(amb, pools);
      validate_garden_path_item(un, pools);
      CHECK(regions.insert(amb.region()).second);
    }
    CHECK(generate_garden_path_items(pools, 40, 13) == items);
    check_kind([&] { generate_garden_path_items(pools, pools.region_verbs.size() + 1, 1); }, ErrorKind::usage);
    auto broken = items[0];
    broken.tokens[1] = "zzz";
    check_kind([&] { validate_garden_path_item(broken, pools); }, ErrorKind::data_invariant);
  }

  TEST_CASE("stimulus lists follow the counterbalancing construction") {
    const auto items = generate_garden_path_items(default_lexicon().garden_path, 40, 2);
    const auto fillers = make_fillers(SyntheticLanguage().sample_many(TemplateMix::background(), 80, 5));
    const auto lists = compile_stimulus_lists(items, fillers, 17);
    REQUIRE(lists.size() == 16);
    for (std::size_t k = 0; k < 16; ++k) {
      CHECK(lists[k].list_id == static_cast<int>(k + 1));
      CHECK(lists[k].trials.size() == 120);
      std::map<int, int> seen;
      for (const auto& t : lists[k].trials)
        if (!t.is_filler()) ++seen[t.pair_id];
      CHECK(seen.size() == 40);
      for (const auto& [id, n] : seen) CHECK(n == 1);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < 120; ++i) {
        const auto& a = lists[k].trials[i];
        const auto& b = lists[k + 4].trials[i];
        CHECK(a.pair_id == b.pair_id);
        if (a.is_filler()) {
          CHECK(a == b);
        } else {
          CHECK(b.condition == counterpart(a.condition));
        }
      }
    }
    for (std::size_t k = 0; k < 8; ++k) {
      for (std::size_t i = 0; i < 120; ++i) CHECK(lists[k + 8].trials[i] == lists[k].trials[119 - i]);
    }
    // Balanced: 20 of each condition per list.
    std::size_t amb = 0;
    for (const auto& t : lists[0].trials) amb += t.condition == Condition::ambiguous;
    CHECK(amb == 20);
    const auto again = compile_stimulus_lists(items, fillers, 17);
    CHECK(format_stimulus_lists_tsv(again) == format_stimulus_lists_tsv(lists));
    CHECK(format_stimulus_lists_tsv(compile_stimulus_lists(items, fillers, 18)) != format_stimulus_lists_tsv(lists));
  }

  TEST_CASE("list faults are rejected naming the list") {
    const auto items = generate_garden_path_items(default_lexicon().garden_path, 6, 2);
    const auto fillers = make_fillers(SyntheticLanguage().sample_many(TemplateMix::background(), 10, 5));
    auto lists = compile_stimulus_lists(items, fillers, 1);
    auto l = lists[2];
    // Present one pair in both conditions.
    for (auto& t : l.trials) {
      if (!t.is_filler() && t.pair_id == 0) {
        l.trials.push_back(items[0].condition == t.condition ? items[1] : items[0]);
        break;
      }
    }
    try {
      validate_stimulus_list(l, 6, 10);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("stimulus list 3") != std::string::npos);
    }
    auto missing = lists[0];
    missing.trials.erase(std::find_if(missing.trials.begin(), missing.trials.end(), [](auto& t) { return t.is_filler(); }));
    check_kind([&] { validate_stimulus_list(missing, 6, 10); }, ErrorKind::data_invariant);
    auto unpaired = items;
    unpaired.pop_back();
    check_kind([&] { compile_stimulus_lists(unpaired, fillers, 1); }, ErrorKind::data_invariant);
    check_kind([&] { compile_stimulus_lists(items, {}, 1); }, ErrorKind::data_invariant);
  }

  TEST_CASE("stimulus TSV round trip") {
    const auto items = generate_garden_path_items(default_lexicon().garden_path, 4, 3);
    const auto fillers = make_fillers(SyntheticLanguage().sample_many(TemplateMix::background(), 6, 5));
    const auto lists = compile_stimulus_lists(items, fillers, 1);
    const auto back = parse_stimulus_lists_tsv(format_stimulus_lists_tsv(lists));
    REQUIRE(back.size() == lists.size());
    for (std::size_t k = 0; k < lists.size(); ++k) {
      CHECK(back[k].list_id == lists[k].list_id);
      CHECK(back[k].trials == lists[k].trials);
    }
    CHECK_THROWS_AS(parse_stimulus_lists_tsv("wrong header\n"), Error);
  }

  TEST_CASE("dative pairs") {
    const auto& pools = default_lexicon().dative;
    const auto items = generate_dative_items(pools, 200, 4);
    REQUIRE(items.size() == 400);
    std::set<Words> sentences;
    for (std::size_t i = 0; i < items.size(); i += 2) {
      const auto& d = items[i];
      const auto& p = items[i + 1];
      CHECK(d.condition == Condition::double_object);
      CHECK(p.condition == Condition::prepositional_object);
      CHECK(d.tokens.size() + 1 == p.tokens.size());
      CHECK(multiset_of(dative_content_words(d)) == multiset_of(dative_content_words(p)));
      CHECK(std::count(p.tokens.begin(), p.tokens.end(), "to") == 1);
      CHECK(sentences.insert(d.tokens).second);
      CHECK(sentences.insert(p.tokens).second);
    }
  }

  TEST_CASE("dative adaptation set") {
    const auto pairs = generate_dative_items(default_lexicon().dative, 200, 4);
    const auto fillers = SyntheticLanguage().sample_many(TemplateMix::background(), 1000, 6);
    const auto m = assemble_dative_adaptation_set(pairs, fillers, Condition::double_object, 8);
    CHECK(m.adaptation_stream.size() == 1100);
    CHECK(m.shared_lexicon_test.size() == 100);
    CHECK(m.shared_syntax_test.size() == 100);
    std::set<std::string> adapted_words;
    std::size_t do_in_stream = 0;
    for (std::size_t i = 0; i < 200; i += 2) {
      for (const auto& w : dative_content_words(pairs[i])) adapted_words.insert(w);
      do_in_stream += std::count(m.adaptation_stream.begin(), m.adaptation_stream.end(), pairs[i].tokens);
      CHECK(std::count(m.shared_lexicon_test.begin(), m.shared_lexicon_test.end(), pairs[i + 1].tokens) == 1);
    }
    CHECK(do_in_stream == 100);
    for (const auto& s : m.shared_syntax_test) {
      StimulusItem probe{0, Condition::double_object, s, 3, 4};
      for (const auto& w : dative_content_words(probe)) CHECK_FALSE(adapted_words.contains(w));
    }
    const auto po = assemble_dative_adaptation_set(pairs, fillers, Condition::prepositional_object, 8);
    CHECK(std::count(po.shared_lexicon_test.front().begin(), po.shared_lexicon_test.front().end(), "to") == 0);
    // Different seeds shuffle differently.
    const auto other = assemble_dative_adaptation_set(pairs, fillers, Condition::double_object, 9);
    CHECK(other.adaptation_stream != m.adaptation_stream);
    auto overlapping = pairs;
    overlapping[200] = pairs[0];
    overlapping[200].pair_id = pairs[200].pair_id;
    overlapping[201] = pairs[1];
    overlapping[201].pair_id = pairs[201].pair_id;
    check_kind([&] { assemble_dative_adaptation_set(overlapping, fillers, Condition::double_object, 8); },
               ErrorKind::data_invariant);
    check_kind([&] { assemble_dative_adaptation_set(pairs, fillers, Condition::ambiguous, 8); }, ErrorKind::usage);
  }

  TEST_CASE("out-of-vocabulary stimulus words are named") {
    const auto items = generate_garden_path_items(default_lexicon().garden_path, 2, 1);
    const auto vocab = Vocabulary::build({{"the"}}, 1);
    try {
      check_in_vocabulary(items, vocab);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("out of vocabulary") != std::string::npos);
    }
  }
}
