#include "corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "error.hpp"

namespace adaptlm::corpus {

TemplateMix TemplateMix::background() {
  TemplateMix m;
  m.transitive = 0.22;
  m.about_main = 0.08;
  m.about_and = 0.04;
  m.full_relative = 0.08;
  m.po_dative = 0.12;
  m.do_dative = 0.01;
  m.names = 0.12;
  m.genre = 0.25;
  m.intransitive = 0.08;
  return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t uniform_index(std::size_t n, std::mt19937_64& rng) {
  if (n == 0) fail(ErrorKind::invalid_argument, "uniform_index: empty range");
  return static_cast<std::size_t>(rng() % n);
}

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const std::string& pick(const Pool& pool, std::mt19937_64& rng) { return pool[uniform_index(pool.size(), rng)]; }

bool coin(double p, std::mt19937_64& rng) { return unit(rng) < p; }

void append(Words& out, std::initializer_list<std::string> ws) { out.insert(out.end(), ws); }

Words noun_phrase(const std::string& noun, const Pool* modifiers, double p_mod, std::mt19937_64& rng) {
  Words np{"the"};
  if (modifiers && coin(p_mod, rng)) np.push_back(pick(*modifiers, rng));
  np.push_back(noun);
  return np;
}

}  // namespace

Words SyntheticLanguage::sample_genre(const GenreTheme& genre, std::mt19937_64& rng) const {
  Words out;
  const auto& shape = genre.templates[uniform_index(genre.templates.size(), rng)];
  for (const auto& slot : shape) {
    if (slot == "S") {
      out.push_back(pick(genre.subjects, rng));
    } else if (slot == "V") {
      out.push_back(pick(genre.verbs, rng));
    } else if (slot == "O") {
      out.push_back(pick(genre.objects, rng));
    } else {
      out.push_back(slot);
    }
  }
  return out;
}

Words SyntheticLanguage::sample(const TemplateMix& mix, std::mt19937_64& rng) const {
  const std::array<double, 10> w{mix.transitive,       mix.about_main, mix.about_and, mix.full_relative,
                                 mix.reduced_relative, mix.po_dative,  mix.do_dative, mix.names,
                                 mix.genre,            mix.intransitive};
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0)) fail(ErrorKind::usage, "template mix has no positive weight");
  double u = unit(rng) * total;
  std::size_t kind = 0;
  for (; kind + 1 < w.size(); ++kind) {
    if (u < w[kind]) break;
    u -= w[kind];
  }
  while (w[kind] <= 0 && kind > 0) --kind;

  const auto& gp = lex_->garden_path;
  const auto& dv = lex_->dative;
  Words s;
  auto subject = [&] {
    auto np = noun_phrase(pick(gp.agents, rng), &gp.adjectives, 0.7, rng);
    s.insert(s.end(), np.begin(), np.end());
  };
  auto object = [&] {
    auto np = noun_phrase(pick(gp.objects, rng), &gp.region_modifiers, 0.7, rng);
    s.insert(s.end(), np.begin(), np.end());
  };
  switch (kind) {
    case 0:
      subject();
      s.push_back(pick(gp.region_verbs, rng));
      object();
      break;
    case 1:
      subject();
      append(s, {pick(gp.about_verbs, rng), "about", "the", pick(gp.topics, rng)});
      break;
    case 2:
      subject();
      append(s, {pick(gp.about_verbs, rng), "about", "the", pick(gp.topics, rng), "and", pick(gp.region_verbs, rng)});
      object();
      break;
    case 3:
    case 4:
      subject();
      if (kind == 3) append(s, {"who", "were"});
      append(s, {pick(gp.about_verbs, rng), "about", "the", pick(gp.topics, rng), pick(gp.region_verbs, rng)});
      object();
      break;
    case 5:
      append(s, {"the", pick(dv.agents, rng), pick(dv.verbs, rng), "the", pick(dv.themes, rng), "to", "the",
                 pick(dv.recipients, rng)});
      break;
    case 6:
      append(s, {"the", pick(dv.agents, rng), pick(dv.verbs, rng), "the", pick(dv.recipients, rng), "the",
                 pick(dv.themes, rng)});
      break;
    case 7: {
      const double u2 = unit(rng);
      if (u2 < 0.5) {
        s.push_back(pick(lex_->names, rng));
        s.push_back(pick(gp.region_verbs, rng));
        object();
      } else if (u2 < 0.75) {
        append(s, {pick(lex_->names, rng), "and", pick(lex_->names, rng), pick(gp.region_verbs, rng)});
        object();
      } else {
        append(s, {pick(lex_->names, rng), pick(dv.verbs, rng), "the", pick(dv.themes, rng), "to",
                   pick(lex_->names, rng)});
      }
      break;
    }
    case 8:
      s = sample_genre(lex_->genres[uniform_index(lex_->genres.size(), rng)], rng);
      return s;
    default:
      subject();
      s.push_back(pick(lex_->intransitive_verbs, rng));
      break;
  }
  s.push_back(".");
  return s;
}

std::vector<Words> SyntheticLanguage::sample_many(const TemplateMix& mix, std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<Words> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample(mix, rng));
  return out;
}

Corpus background_corpus(std::size_t sentences, std::uint64_t seed, std::size_t sentences_per_text) {
  if (sentences_per_text == 0) fail(ErrorKind::usage, "sentences_per_text must be >= 1");
  SyntheticLanguage lang;
  auto all = lang.sample_many(TemplateMix::background(), sentences, seed);
  Corpus c;
  for (std::size_t i = 0; i < all.size(); i += sentences_per_text) {
    Text t;
    t.id = "bg" + std::to_string(i / sentences_per_text + 1);
    t.genre = "background";
    for (std::size_t j = i; j < std::min(all.size(), i + sentences_per_text); ++j) t.sentences.push_back(all[j]);
    c.texts.push_back(std::move(t));
  }
  return c;
}

Corpus genre_corpus(const std::vector<std::string>& genres, std::size_t texts_per_genre,
                    std::size_t sentences_per_text, double genre_share, std::uint64_t seed) {
  SyntheticLanguage lang;
  const auto mix = TemplateMix::background();
  Corpus c;
  for (std::size_t g = 0; g < genres.size(); ++g) {
    const auto& theme = lang.lexicon().genre(genres[g]);
    std::mt19937_64 rng(derive_seed(seed, g));
    for (std::size_t t = 0; t < texts_per_genre; ++t) {
      Text text;
      text.id = genres[g] + std::to_string(t + 1);
      text.genre = genres[g];
      for (std::size_t k = 0; k < sentences_per_text; ++k) {
        text.sentences.push_back(coin(genre_share, rng) ? lang.sample_genre(theme, rng) : lang.sample(mix, rng));
      }
      c.texts.push_back(std::move(text));
    }
  }
  return c;
}

Corpus text_specific_corpus(std::size_t texts, std::size_t sentences_per_text, std::uint64_t seed) {
  const auto& lex = default_lexicon();
  const auto& gp = lex.garden_path;
  const auto& dv = lex.dative;
  Corpus c;
  for (std::size_t t = 0; t < texts; ++t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    auto cast = [&](const Pool& pool, std::size_t k) {
      Pool out;
      while (out.size() < k) {
        const auto& w = pick(pool, rng);
        if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
      }
      return out;
    };
    const Pool names = cast(lex.names, 3);
    const Pool objects = cast(gp.objects, 4);
    const Pool verbs = cast(gp.region_verbs, 3);
    const Pool mods = cast(gp.region_modifiers, 3);
    const Pool themes = cast(dv.themes, 2);
    auto draw = [&](const Pool& local, const Pool& global) -> const std::string& {
      return coin(0.9, rng) ? pick(local, rng) : pick(global, rng);
    };
    Text text;
    text.id = "story" + std::to_string(t + 1);
    text.genre = "stories";
    for (std::size_t k = 0; k < sentences_per_text; ++k) {
      Words s;
      const double u = unit(rng);
      if (u < 0.5) {
        append(s, {draw(names, lex.names), draw(verbs, gp.region_verbs), "the"});
        if (coin(0.5, rng)) s.push_back(draw(mods, gp.region_modifiers));
        s.push_back(draw(objects, gp.objects));
      } else if (u < 0.75) {
        append(s, {draw(names, lex.names), "and", draw(names, lex.names), draw(verbs, gp.region_verbs), "the",
                   draw(objects, gp.objects)});
      } else {
        append(s, {draw(names, lex.names), pick(dv.verbs, rng), "the", draw(themes, dv.themes), "to",
                   draw(names, lex.names)});
      }
      s.push_back(".");
      text.sentences.push_back(std::move(s));
    }
    c.texts.push_back(std::move(text));
  }
  return c;
}

Corpus cyclic_corpus(const Words& cycle, std::size_t repeats, std::size_t sentences) {
  if (cycle.empty() || repeats == 0) fail(ErrorKind::usage, "cyclic_corpus: empty cycle");
  Words s;
  for (std::size_t r = 0; r < repeats; ++r) s.insert(s.end(), cycle.begin(), cycle.end());
  Corpus c;
  Text t;
  t.id = "cycle";
  t.genre = "cyclic";
  t.sentences.assign(sentences, s);
  c.texts.push_back(std::move(t));
  return c;
}

}  // namespace adaptlm::corpus
