#pragma once

#include <string>
#include <vector>

namespace adaptlm::corpus {

using Pool = std::vector<std::string>;

// Slots of the reduced-relative template:
//   the ADJ AGENT [who were] VERB about the TOPIC | REGION_VERB the MODIFIER | OBJECT .
struct GardenPathPools {
  Pool adjectives;
  Pool agents;  // plural
  Pool about_verbs;
  Pool topics;
  Pool region_verbs;
  Pool region_modifiers;
  Pool objects;
};

// PO: the AGENT VERB the THEME to the RECIPIENT .
// DO: the AGENT VERB the RECIPIENT the THEME .
struct DativePools {
  Pool agents;
  Pool verbs;
  Pool themes;
  Pool recipients;
};

struct GenreTheme {
  std::string name;
  Pool subjects;
  Pool verbs;
  Pool objects;
  // Sentence shapes; "S", "V" and "O" are slots, everything else is literal.
  std::vector<std::vector<std::string>> templates;
};

struct Lexicon {
  GardenPathPools garden_path;
  DativePools dative;
  Pool names;
  Pool intransitive_verbs;
  std::vector<GenreTheme> genres;

  const GenreTheme& genre(const std::string& name) const;
  std::vector<std::string> genre_names() const;
};

const Lexicon& default_lexicon();

}  // namespace adaptlm::corpus
