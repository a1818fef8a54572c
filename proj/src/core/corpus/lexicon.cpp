#include "corpus/lexicon.hpp"

#include <sstream>

#include "error.hpp"

namespace adaptlm::corpus {

namespace {

Pool words(const char* text) {
  Pool out;
  std::istringstream in(text);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<std::vector<std::string>> shapes(std::initializer_list<const char*> lines) {
  std::vector<std::vector<std::string>> out;
  for (const char* l : lines) out.push_back(words(l));
  return out;
}

Lexicon make_default() {
  Lexicon lex;
  auto& gp = lex.garden_path;
  gp.adjectives = words("experienced young old nervous tired careful brave quiet angry clever famous patient proud "
                        "honest eager gentle");
  gp.agents = words("soldiers students workers farmers doctors nurses sailors artists lawyers teachers guards pilots "
                    "miners scholars players drivers hunters writers judges clerks cooks dancers singers merchants");
  gp.about_verbs = words("warned told informed advised reminded cautioned questioned taught asked briefed notified "
                         "alerted lectured consulted");
  gp.topics = words("dangers storm plan changes rules risks problem delay threat schedule weather budget contract "
                    "election accident festival");
  gp.region_verbs = words(
      "conducted planned organized started finished attended cancelled visited repaired painted cleaned built sold "
      "bought found opened closed joined watched carried moved checked ordered signed won lost paid entered crossed "
      "guarded led delayed defended searched destroyed protected prepared inspected recorded described designed "
      "collected followed studied launched managed reached supported");
  gp.region_modifiers = words(
      "midnight morning evening weekly annual final secret second first daily costly dangerous long short busy "
      "crowded empty new northern southern eastern western public private local central main small large huge tiny "
      "wooden stone modern ancient rare quick slow difficult simple strange special official major minor early late "
      "regular");
  gp.objects = words("raid meeting trip project party house bridge road market school concert survey mission tour "
                     "game show race camp class test report garden church museum");

  auto& d = lex.dative;
  d.agents = words("man woman boy girl uncle aunt father mother brother sister grandfather grandmother captain coach "
                   "chef clown mayor prince princess stranger waiter tailor baker butcher landlord janitor plumber "
                   "banker florist barber sheriff monk nun pirate widow peddler vendor porter jeweler ranger "
                   "sergeant professor doorman nanny milkman postman fisherman shepherd");
  d.verbs = words("gave sent threw handed offered showed passed brought lent mailed tossed promised fed owed "
                  "granted awarded loaned posted slid rolled flung shipped faxed wired");
  d.themes = words("ball book letter gift key map coin ticket apple note cup toy hat ring bone flower card box pen "
                   "coat cake kite stick lamp bottle basket blanket bucket candle carrot cookie compass drum feather "
                   "glove hammer jar ladder mirror necklace orange pillow ribbon rope scarf spoon sweater whistle");
  d.recipients = words("dog cat neighbor friend cousin nephew niece student guest visitor customer pupil child "
                       "baby horse parrot rabbit puppy kitten monkey pony goat lamb duck tourist orphan toddler sheep "
                       "pig donkey chicken turtle hamster squirrel tenant passenger client partner twin roommate "
                       "classmate teammate novice beginner hiker camper reader owl");

  lex.names = words("anna ben clara david emma frank grace henry iris jack kate leo mia noah olga paul rosa sam tina "
                    "victor wendy xavier yara zack alice bruno carla dennis elena felix gina hugo ivan julia karl "
                    "lena marco nina oscar petra quinn rita simon tara uma vera walter yusuf zoe adam bella chris "
                    "diana eric fiona george hanna isaac jane kevin");
  lex.intransitive_verbs = words("arrived slept laughed waited smiled rested");

  lex.genres.push_back({"fairy",
                        words("kings queens dragons witches giants knights wizards elves dwarves trolls fairies "
                              "princes"),
                        words("enchanted cursed rescued summoned banished captured slew tricked crowned haunted"),
                        words("castle tower forest crown sword spell treasure kingdom dungeon cave potion unicorn"),
                        shapes({"once the S V the O .", "the S V the O and the S V the O .",
                                "long ago the S V the O ."})});
  lex.genres.push_back({"science",
                        words("scientists engineers chemists biologists physicists researchers technicians "
                              "astronomers geologists surgeons analysts inventors"),
                        words("measured analyzed observed calculated examined sampled simulated published "
                              "discovered isolated"),
                        words("molecule sample protein telescope reactor enzyme fossil particle galaxy virus "
                              "crystal laboratory"),
                        shapes({"the S V the O in the laboratory .", "the S carefully V the O .",
                                "the S V the O with the O ."})});
  lex.genres.push_back({"sports",
                        words("athletes runners swimmers boxers skaters golfers jockeys referees goalkeepers "
                              "cyclists strikers wrestlers"),
                        words("kicked tackled scored dribbled blocked chased trained defeated raced lifted"),
                        words("goal trophy medal stadium match league puck racket helmet tournament season "
                              "championship"),
                        shapes({"the S V the O during the match .", "the S V the O again .",
                                "the S quickly V the O ."})});
  lex.genres.push_back({"cooking",
                        words("chefs bakers butchers grocers confectioners brewers vintners cheesemakers caterers "
                              "diners gourmets farmhands"),
                        words("baked boiled fried roasted stirred sliced seasoned grilled chopped tasted"),
                        words("soup bread pie sauce stew pasta salad pudding omelet roast dough curry"),
                        shapes({"the S V the O with butter .", "the S V the O slowly .",
                                "the S V the O and V the O ."})});
  return lex;
}

}  // namespace

const GenreTheme& Lexicon::genre(const std::string& name) const {
  for (const auto& g : genres) {
    if (g.name == name) return g;
  }
  fail(ErrorKind::usage, "unknown genre theme '" + name + "'");
}

std::vector<std::string> Lexicon::genre_names() const {
  std::vector<std::string> out;
  for (const auto& g : genres) out.push_back(g.name);
  return out;
}

const Lexicon& default_lexicon() {
  static const Lexicon lex = make_default();
  return lex;
}

}  // namespace adaptlm::corpus
