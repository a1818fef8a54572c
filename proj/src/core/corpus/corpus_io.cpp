#include "corpus/corpus_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace adaptlm::corpus {

std::vector<std::string> Corpus::genres() const {
  std::vector<std::string> out;
  for (const auto& t : texts) {
    if (std::find(out.begin(), out.end(), t.genre) == out.end()) out.push_back(t.genre);
  }
  return out;
}

std::vector<Words> Corpus::all_sentences() const {
  std::vector<Words> out;
  for (const auto& t : texts) out.insert(out.end(), t.sentences.begin(), t.sentences.end());
  return out;
}

std::vector<const Text*> Corpus::texts_in(std::string_view genre) const {
  std::vector<const Text*> out;
  for (const auto& t : texts) {
    if (t.genre == genre) out.push_back(&t);
  }
  return out;
}

std::size_t Corpus::sentence_count() const {
  std::size_t n = 0;
  for (const auto& t : texts) n += t.sentences.size();
  return n;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Corpus parse_corpus(std::string_view contents) {
  Corpus corpus;
  std::string genre = "default";
  Text current;
  bool open = false;
  std::size_t auto_id = 0;

  auto close = [&] {
    if (open && !current.sentences.empty()) corpus.texts.push_back(std::move(current));
    current = Text{};
    open = false;
  };
  auto ensure_open = [&] {
    if (!open) {
      current.id = "text" + std::to_string(++auto_id);
      current.genre = genre;
      open = true;
    }
  };

  std::istringstream in{std::string(contents)};
  for (std::string raw; std::getline(in, raw);) {
    const std::string line = trim(raw);
    if (line.empty()) {
      close();
      continue;
    }
    if (line.rfind("#genre:", 0) == 0) {
      close();
      genre = trim(line.substr(7));
      if (genre.empty()) fail(ErrorKind::data_invariant, "empty #genre: directive");
      continue;
    }
    if (line.rfind("#text:", 0) == 0) {
      close();
      current.id = trim(line.substr(6));
      if (current.id.empty()) current.id = "text" + std::to_string(++auto_id);
      current.genre = genre;
      open = true;
      continue;
    }
    if (line[0] == '#') continue;
    ensure_open();
    auto words = tokenize_words(line);
    if (!words.empty()) current.sentences.push_back(std::move(words));
  }
  close();
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open corpus " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str());
}

std::string format_corpus(const Corpus& corpus) {
  std::string out;
  std::string genre;
  for (std::size_t i = 0; i < corpus.texts.size(); ++i) {
    const auto& t = corpus.texts[i];
    if (i == 0 || t.genre != genre) {
      out += "#genre: " + t.genre + "\n";
      genre = t.genre;
    }
    out += "#text: " + t.id + "\n";
    for (const auto& s : t.sentences) out += join(s) + "\n";
    out += "\n";
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write corpus " + path.string());
  out << format_corpus(corpus);
}

}  // namespace adaptlm::corpus
