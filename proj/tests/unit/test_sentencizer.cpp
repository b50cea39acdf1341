#include <gtest/gtest.h>

#include <string>

#include "freechunk/rng.hpp"
#include "freechunk/sentencizer.hpp"

namespace fc = freechunk;

namespace {

std::vector<std::string> texts(const std::vector<fc::Sentence>& sentences) {
  std::vector<std::string> out;
  for (const auto& s : sentences) out.push_back(s.text);
  return out;
}

std::string random_text(fc::Rng& rng, std::size_t length) {
  static const std::string kAlphabet = "abcdefgXYZ019 .!?\"')]\n\t,;:-Dr.e.g.";
  std::string text;
  for (std::size_t i = 0; i < length; ++i) text += kAlphabet[rng.below(kAlphabet.size())];
  return text;
}

}  // namespace

TEST(SplitSentences, EmptyAndWhitespace) {
  EXPECT_TRUE(fc::split_sentences("").empty());
  EXPECT_TRUE(fc::split_sentences(" \n\t ").empty());
}

TEST(SplitSentences, PlainTerminals) {
  EXPECT_EQ(texts(fc::split_sentences("It rained. We stayed.")),
            (std::vector<std::string>{"It rained.", "We stayed."}));
}

TEST(SplitSentences, AbbreviationSuppressesSplit) {
  EXPECT_EQ(texts(fc::split_sentences("Dr. Smith arrived. He left.")),
            (std::vector<std::string>{"Dr. Smith arrived.", "He left."}));
  EXPECT_EQ(texts(fc::split_sentences("Use tools, e.g. hammers. Then rest.")),
            (std::vector<std::string>{"Use tools, e.g. hammers.", "Then rest."}));
}

TEST(SplitSentences, DecimalsAndNoTerminal) {
  EXPECT_EQ(texts(fc::split_sentences("Pi is 3.14 roughly. Yes")),
            (std::vector<std::string>{"Pi is 3.14 roughly.", "Yes"}));
  EXPECT_EQ(fc::split_sentences("no punctuation at all").size(), 1u);
}

TEST(SplitSentences, ClosersStayWithTheirSentence) {
  EXPECT_EQ(texts(fc::split_sentences("He said \"stop.\" Then he left (quietly!) Why?! Done.")),
            (std::vector<std::string>{"He said \"stop.\"", "Then he left (quietly!)", "Why?!", "Done."}));
  EXPECT_EQ(texts(fc::split_sentences("She wrote \xE2\x80\x9Chi.\xE2\x80\x9D Next one.")),
            (std::vector<std::string>{"She wrote \xE2\x80\x9Chi.\xE2\x80\x9D", "Next one."}));
}

TEST(SplitSentences, SpansIndexTheSource) {
  const std::string text = "  One.  Two!\nThree?";
  const auto s = fc::split_sentences(text);
  ASSERT_EQ(s.size(), 3u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].index, i);
    EXPECT_EQ(text.substr(s[i].span.begin, s[i].span.size()), s[i].text);
  }
}

TEST(SplitSentences, CustomAbbreviations) {
  fc::SentenceSplitter splitter({"approx."});
  EXPECT_EQ(splitter.split("It is approx. ten. Dr. Who.").size(), 3u);
}

TEST(CountTokens, Examples) {
  EXPECT_EQ(fc::count_tokens(""), 0u);
  EXPECT_EQ(fc::count_tokens("hello world"), 2u);
  EXPECT_EQ(fc::count_tokens("It's done."), 5u);
  EXPECT_EQ(fc::count_tokens("caf\xC3\xA9 ok"), 2u);
}

TEST(SentencizerProperties, ReconstructionIdempotenceMonotoneSpans) {
  fc::Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string text = random_text(rng, rng.below(120));
    const auto sentences = fc::split_sentences(text);
    std::string rebuilt;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      const auto& s = sentences[i];
      ASSERT_LE(cursor, s.span.begin);
      ASSERT_LT(s.span.begin, s.span.end);
      rebuilt += text.substr(cursor, s.span.begin - cursor);
      rebuilt += s.text;
      cursor = s.span.end;
      EXPECT_GE(s.token_count, 1u);

      const auto again = fc::split_sentences(s.text);
      ASSERT_EQ(again.size(), 1u) << "sentence: [" << s.text << "]";
      EXPECT_EQ(again[0].text, s.text);
    }
    rebuilt += text.substr(cursor);
    ASSERT_EQ(rebuilt, text);
    // Gaps between sentences are pure whitespace.
    for (std::size_t i = 0; i + 1 < sentences.size(); ++i) {
      for (std::size_t b = sentences[i].span.end; b < sentences[i + 1].span.begin; ++b) {
        EXPECT_TRUE(std::isspace(static_cast<unsigned char>(text[b])));
      }
    }
  }
}

TEST(MakeDocument, CarriesIdAndText) {
  const auto doc = fc::make_document("d1", "A b. C d.");
  EXPECT_EQ(doc.id, "d1");
  EXPECT_EQ(doc.size(), 2u);
  EXPECT_EQ(doc.sentences[1].token_count, 3u);
}
