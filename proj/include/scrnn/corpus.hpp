#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scrnn/utf8.hpp"

namespace scrnn {

using ClassId = std::int32_t;

inline constexpr ClassId kUnk = 0;
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kOtherToken = "<other>";

/// Raw tokenized text: one vector of tokens per sentence.
using Sentence = std::vector<std::string>;
using Corpus = std::vector<Sentence>;

struct LabeledToken {
  std::string surface;
  ClassId label = kUnk;

  bool operator==(const LabeledToken&) const = default;
};

struct Dataset {
  std::vector<std::vector<LabeledToken>> sentences;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
};

/// Splits on runs of whitespace; everything else is kept verbatim.
inline Sentence tokenize_line(std::string_view line) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  Sentence tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(ws, pos);
    if (start == std::string_view::npos) break;
    const auto end = line.find_first_of(ws, start);
    tokens.emplace_back(line.substr(start, end == std::string_view::npos ? line.npos : end - start));
    if (end == std::string_view::npos) break;
    pos = end;
  }
  return tokens;
}

/// Reads a corpus file: one tokenized sentence per line. Blank lines are
/// skipped.
inline Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path + "'");
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize_line(line);
    if (!tokens.empty()) corpus.push_back(std::move(tokens));
  }
  return corpus;
}

/// Character index space. Slot size()-1 is reserved for characters that
/// were not seen when the alphabet was built.
class Alphabet {
 public:
  Alphabet() = default;

  /// chars must be distinct; they are sorted by code point.
  explicit Alphabet(std::vector<char32_t> chars) : chars_(std::move(chars)) {
    std::sort(chars_.begin(), chars_.end());
    if (std::adjacent_find(chars_.begin(), chars_.end()) != chars_.end())
      throw std::invalid_argument("alphabet contains duplicate characters");
    for (std::size_t i = 0; i < chars_.size(); ++i) index_.emplace(chars_[i], static_cast<int>(i));
  }

  const std::vector<char32_t>& chars() const { return chars_; }
  /// N, including the OTHER slot.
  std::size_t size() const { return chars_.size() + 1; }
  int other_slot() const { return static_cast<int>(chars_.size()); }

  int slot(char32_t c) const {
    auto it = index_.find(c);
    return it == index_.end() ? other_slot() : it->second;
  }
  bool contains(char32_t c) const { return index_.contains(c); }

  bool operator==(const Alphabet& o) const { return chars_ == o.chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int> index_;
};

/// Word label space; class 0 is always UNK.
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(std::vector<std::string>{}, {}) {}

  /// words excludes UNK; freq gives training counts (may be empty).
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> freq,
             std::uint64_t covered_tokens = 0, std::uint64_t total_tokens = 0)
      : covered_(covered_tokens), total_(total_tokens) {
    if (!freq.empty() && freq.size() != words.size())
      throw std::invalid_argument("vocabulary frequency list does not match word list");
    words_.reserve(words.size() + 1);
    freq_.reserve(words.size() + 1);
    words_.emplace_back(kUnkToken);
    freq_.push_back(0);
    index_.emplace(std::string(kUnkToken), kUnk);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i] == kUnkToken) throw std::invalid_argument("'<unk>' is reserved");
      const auto id = static_cast<ClassId>(words_.size());
      if (!index_.emplace(words[i], id).second)
        throw std::invalid_argument("duplicate vocabulary word '" + words[i] + "'");
      words_.push_back(std::move(words[i]));
      freq_.push_back(freq.empty() ? 0 : freq[i]);
    }
  }

  /// v, including UNK.
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(ClassId id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::uint64_t frequency(ClassId id) const { return freq_.at(static_cast<std::size_t>(id)); }

  /// Class id of token, or UNK.
  ClassId label(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
  }

  /// Fraction of build-corpus tokens that received a non-UNK label.
  double coverage() const { return total_ == 0 ? 0.0 : static_cast<double>(covered_) / total_; }
  std::uint64_t covered_tokens() const { return covered_; }
  std::uint64_t total_tokens() const { return total_; }

  bool operator==(const Vocabulary& o) const { return words_ == o.words_ && freq_ == o.freq_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> freq_;
  std::unordered_map<std::string, ClassId> index_;
  std::uint64_t covered_ = 0;
  std::uint64_t total_ = 0;
};

inline Alphabet build_alphabet(const Corpus& corpus) {
  std::vector<char32_t> seen;
  bool any = false;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) {
      any = true;
      for (char32_t c : utf8::decode(token)) seen.push_back(c);
    }
  }
  if (!any) throw std::invalid_argument("cannot build an alphabet from an empty corpus");
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  return Alphabet(std::move(seen));
}

/// The k-1 most frequent tokens plus UNK; ties go to the lexicographically
/// smaller word. When the corpus has fewer than k-1 distinct words they are
/// all kept and v is smaller than k.
inline Vocabulary build_vocabulary(const Corpus& corpus, std::size_t k) {
  if (k < 2) throw std::invalid_argument("vocabulary size must be at least 2");
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) {
      ++total;
      if (token != kUnkToken) ++counts[token];
    }
  }
  if (counts.empty()) throw std::invalid_argument("corpus has no words to build a vocabulary from");
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  // counts is already in lexicographic order, so a stable sort keeps it for ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const auto keep = std::min(ranked.size(), k - 1);
  std::vector<std::string> words;
  std::vector<std::uint64_t> freq;
  std::uint64_t covered = 0;
  for (std::size_t i = 0; i < keep; ++i) {
    words.push_back(ranked[i].first);
    freq.push_back(ranked[i].second);
    covered += ranked[i].second;
  }
  return Vocabulary(std::move(words), std::move(freq), covered, total);
}

inline ClassId label_token(std::string_view token, const Vocabulary& vocab) {
  return vocab.label(token);
}

inline Dataset label_corpus(const Corpus& corpus, const Vocabulary& vocab) {
  Dataset data;
  data.sentences.reserve(corpus.size());
  for (const auto& sentence : corpus) {
    auto& out = data.sentences.emplace_back();
    out.reserve(sentence.size());
    for (const auto& token : sentence) out.push_back({token, vocab.label(token)});
  }
  return data;
}

inline Corpus surfaces(const Dataset& data) {
  Corpus corpus;
  corpus.reserve(data.sentences.size());
  for (const auto& s : data.sentences) {
    auto& out = corpus.emplace_back();
    for (const auto& t : s) out.push_back(t.surface);
  }
  return corpus;
}

// Dump formats: one entry per line, line number == index. Vocabulary lines
// are word<TAB>training count.

inline void write_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (std::size_t i = 0; i < vocab.size(); ++i)
    out << vocab.words()[i] << '\t' << vocab.frequency(static_cast<ClassId>(i)) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Vocabulary read_vocabulary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.substr(0, line.find('\t')) != kUnkToken)
    throw std::runtime_error("'" + path + "' is not a vocabulary dump (first line must be <unk>)");
  std::vector<std::string> words;
  std::vector<std::uint64_t> freq;
  bool counted = true;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    words.push_back(line.substr(0, tab));
    if (tab == std::string::npos) {
      counted = false;
      continue;
    }
    std::uint64_t n = 0;
    const auto* first = line.data() + tab + 1;
    const auto* last = line.data() + line.size();
    auto [end, ec] = std::from_chars(first, last, n);
    if (ec != std::errc() || end != last)
      throw std::runtime_error("'" + path + "': bad count on line " + std::to_string(words.size() + 1));
    freq.push_back(n);
  }
  if (!counted) freq.clear();
  return Vocabulary(std::move(words), std::move(freq));
}

inline void write_alphabet(const Alphabet& alphabet, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (char32_t c : alphabet.chars()) out << utf8::encode(c) << '\n';
  out << kOtherToken << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Alphabet read_alphabet(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<char32_t> chars;
  std::string line;
  bool saw_other = false;
  while (std::getline(in, line)) {
    if (saw_other) throw std::runtime_error("'" + path + "': entries after the <other> slot");
    if (line == kOtherToken) {
      saw_other = true;
      continue;
    }
    const auto cps = utf8::decode(line);
    if (cps.size() != 1) throw std::runtime_error("'" + path + "': alphabet entry is not one character");
    chars.push_back(cps.front());
  }
  if (!saw_other) throw std::runtime_error("'" + path + "': missing <other> slot");
  return Alphabet(std::move(chars));
}

}  // namespace scrnn
