#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace freechunk {

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct Sentence {
  std::size_t index = 0;
  std::string text;
  ByteSpan span;
  std::size_t token_count = 0;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
};

/// Abbreviations that never terminate a sentence. Entries are lower case and
/// include their trailing period.
const std::set<std::string>& default_abbreviations();

/// Rule-based sentence boundary detection.
///
/// A boundary follows a run of terminal punctuation (. ! ?) plus any closing
/// quotes or brackets, provided the next byte is whitespace or the end of the
/// text. A single period closing a listed abbreviation is not a boundary.
/// Sentences never begin or end with whitespace; the whitespace between two
/// sentences is the gap between their byte spans.
class SentenceSplitter {
 public:
  SentenceSplitter();
  explicit SentenceSplitter(std::set<std::string> abbreviations);

  std::vector<Sentence> split(std::string_view text) const;

  const std::set<std::string>& abbreviations() const { return abbreviations_; }

 private:
  bool is_abbreviation(std::string_view text, std::size_t period_pos) const;

  std::set<std::string> abbreviations_;
};

std::vector<Sentence> split_sentences(std::string_view text);

/// Maximal alphanumeric runs count as one token each, as does every other
/// non-whitespace byte. Bytes >= 0x80 are treated as word characters so that
/// multi-byte UTF-8 letters stay inside their word.
std::size_t count_tokens(std::string_view text);

Document make_document(std::string id, std::string text,
                       const SentenceSplitter& splitter = SentenceSplitter());

/// Lists every file-level abbreviation override: one entry per line, blank
/// lines and lines starting with '#' ignored.
std::set<std::string> load_abbreviations(const std::string& path);

}  // namespace freechunk
