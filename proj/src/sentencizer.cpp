#include "freechunk/sentencizer.hpp"

#include <algorithm>
#include <fstream>

#include "freechunk/error.hpp"

namespace freechunk {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_terminal(unsigned char c) { return c == '.' || c == '!' || c == '?'; }

bool is_ascii_closer(unsigned char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

// Length of a UTF-8 closing quote (U+2019, U+201D) starting at pos, else 0.
std::size_t utf8_closer_length(std::string_view text, std::size_t pos) {
  if (pos + 2 < text.size() && static_cast<unsigned char>(text[pos]) == 0xE2 &&
      static_cast<unsigned char>(text[pos + 1]) == 0x80) {
    const auto third = static_cast<unsigned char>(text[pos + 2]);
    if (third == 0x99 || third == 0x9D) return 3;
  }
  return 0;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

const std::set<std::string>& default_abbreviations() {
  static const std::set<std::string> kAbbreviations = {
      "mr.",  "mrs.", "ms.",  "dr.",   "prof.", "sr.",  "jr.",  "st.",  "vs.",   "etc.",
      "e.g.", "i.e.", "cf.",  "al.",   "inc.",  "ltd.", "co.",  "corp.", "no.",  "nos.",
      "fig.", "figs.", "eq.", "eqs.",  "vol.",  "approx.", "dept.", "est.", "gen.", "gov.",
      "mt.",  "p.",   "pp.",  "ref.",  "sec.",  "u.s.", "u.k.", "a.m.", "p.m.", "jan.",
      "feb.", "mar.", "apr.", "jun.",  "jul.",  "aug.", "sep.", "sept.", "oct.", "nov.",
      "dec."};
  return kAbbreviations;
}

SentenceSplitter::SentenceSplitter() : abbreviations_(default_abbreviations()) {}

SentenceSplitter::SentenceSplitter(std::set<std::string> abbreviations) {
  for (const auto& a : abbreviations) abbreviations_.insert(to_lower_ascii(a));
}

bool SentenceSplitter::is_abbreviation(std::string_view text, std::size_t period_pos) const {
  std::size_t begin = period_pos;
  while (begin > 0 && !is_space(static_cast<unsigned char>(text[begin - 1]))) --begin;
  // Opening quotes and brackets are not part of the word.
  while (begin < period_pos && (text[begin] == '"' || text[begin] == '\'' || text[begin] == '(' ||
                                text[begin] == '[' || text[begin] == '{')) {
    ++begin;
  }
  const auto word = to_lower_ascii(text.substr(begin, period_pos + 1 - begin));
  return abbreviations_.contains(word);
}

std::vector<Sentence> SentenceSplitter::split(std::string_view text) const {
  std::vector<Sentence> out;
  const std::size_t n = text.size();
  std::size_t pos = 0;

  auto skip_space = [&](std::size_t p) {
    while (p < n && is_space(static_cast<unsigned char>(text[p]))) ++p;
    return p;
  };
  auto emit = [&](std::size_t begin, std::size_t end) {
    while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
    if (end <= begin) return;
    Sentence s;
    s.index = out.size();
    s.span = {begin, end};
    s.text = std::string(text.substr(begin, end - begin));
    s.token_count = count_tokens(s.text);
    out.push_back(std::move(s));
  };

  std::size_t start = skip_space(0);
  pos = start;
  while (pos < n) {
    const auto c = static_cast<unsigned char>(text[pos]);
    if (!is_terminal(c)) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < n && is_terminal(static_cast<unsigned char>(text[end]))) ++end;
    const bool single_period = (end - pos == 1) && c == '.';
    for (;;) {
      if (end < n && is_ascii_closer(static_cast<unsigned char>(text[end]))) {
        ++end;
      } else if (const auto len = utf8_closer_length(text, end); len > 0) {
        end += len;
      } else {
        break;
      }
    }
    const bool at_boundary = end == n || is_space(static_cast<unsigned char>(text[end]));
    if (at_boundary && !(single_period && is_abbreviation(text, pos))) {
      emit(start, end);
      start = skip_space(end);
      pos = start;
    } else {
      pos = end;
    }
  }
  if (start < n) emit(start, n);
  return out;
}

std::vector<Sentence> split_sentences(std::string_view text) {
  static const SentenceSplitter kDefault;
  return kDefault.split(text);
}

std::size_t count_tokens(std::string_view text) {
  std::size_t tokens = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      ++tokens;
      while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      ++tokens;
      ++i;
    }
  }
  return tokens;
}

Document make_document(std::string id, std::string text, const SentenceSplitter& splitter) {
  Document doc{std::move(id), std::move(text), {}};
  doc.sentences = splitter.split(doc.text);
  return doc;
}

std::set<std::string> load_abbreviations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open abbreviation list " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    out.insert(to_lower_ascii(std::string_view(line).substr(first, last - first + 1)));
  }
  return out;
}

}  // namespace freechunk
