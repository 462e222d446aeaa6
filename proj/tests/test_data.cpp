#include <set>
#include <sstream>

#include "doctest.h"

#include "seqmark/data.hpp"
#include "seqmark/tensor.hpp"
#include "support/oracles.hpp"

using namespace seqmark;

namespace {

const std::size_t B = label_index(Label::BRumor), I = label_index(Label::IRumor), O = label_index(Label::O);

std::vector<LabeledExample> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

std::vector<LabeledExample> numbered(std::size_t n) {
  std::vector<LabeledExample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].raw_tokens = {std::to_string(i)};
    out[i].labels = {O};
    out[i].tokens = {0};
  }
  return out;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("parse: minimal file and block delimiter") {
  auto one = parse("今\tO\n天\tO\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 2);
  CHECK(one[0].raw_tokens == std::vector<std::string>{"今", "天"});
  CHECK(one[0].labels == std::vector<std::size_t>{O, O});

  auto two = parse("a\tB-Rumor\nb\tI-Rumor\n\nc\tO\n");
  REQUIRE(two.size() == 2);
  CHECK(two[0].labels == std::vector<std::size_t>{B, I});
  CHECK(two[1].labels == std::vector<std::size_t>{O});

  CHECK(parse("\n\n\na\tO\r\n\n\n").size() == 1);
  CHECK(parse("").empty());
}

TEST_CASE("parse: errors carry the line number") {
  try {
    parse("a\tO\nb\tX-Rumor\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  try {
    parse("a\tO\n\nb O\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
  CHECK_THROWS_AS(parse("a\tO\tO\n"), ParseError);
  CHECK_THROWS_AS(parse("a\to\n"), ParseError);
}

TEST_CASE("validate_bio") {
  CHECK(validate_bio(std::vector<std::size_t>{O, B, I, I, O}).empty());
  CHECK(validate_bio(std::vector<std::size_t>{O, I}) == std::vector<std::size_t>{1});
  CHECK(validate_bio(std::vector<std::size_t>{B, I, B, I}).empty());
  CHECK(validate_bio(std::vector<std::size_t>{I, O, I}) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("split_dataset: 8:1:1 partition, reproducible by seed") {
  auto split = split_dataset(numbered(100), 1);
  CHECK(split.train.size() == 80);
  CHECK(split.validation.size() == 10);
  CHECK(split.test.size() == 10);

  std::multiset<std::string> seen;
  for (const auto* part : {&split.train, &split.validation, &split.test})
    for (const auto& ex : *part) seen.insert(ex.raw_tokens[0]);
  CHECK(seen.size() == 100);
  CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == 100);

  auto again = split_dataset(numbered(100), 1);
  auto other = split_dataset(numbered(100), 2);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < 80; ++i) {
    same &= again.train[i].raw_tokens == split.train[i].raw_tokens;
    differs |= other.train[i].raw_tokens != split.train[i].raw_tokens;
  }
  CHECK(same);
  CHECK(differs);

  auto odd = split_dataset(numbered(13), 4);
  CHECK(odd.train.size() == 10);
  CHECK(odd.validation.size() == 1);
  CHECK(odd.test.size() == 2);
  CHECK_THROWS_AS(split_dataset(numbered(9), 1), ConfigError);
}

TEST_CASE("tokenize") {
  CHECK(tokenize("今天 下雨", Tokenization::Character) == std::vector<std::string>{"今", "天", "下", "雨"});
  CHECK(tokenize("ab c", Tokenization::Character) == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("  the\tquick  fox ", Tokenization::Whitespace) ==
        std::vector<std::string>{"the", "quick", "fox"});
  CHECK(tokenize("", Tokenization::Whitespace).empty());
  CHECK(parse_tokenization("char") == Tokenization::Character);
  CHECK_THROWS_AS(parse_tokenization("bytes"), ConfigError);
}

TEST_CASE("vocabulary: empty corpus, ordering, ties, round trip") {
  Vocabulary empty = build_vocab(std::vector<LabeledExample>{});
  CHECK(empty.size() == 1);
  CHECK(empty.token(0) == Vocabulary::kUnknownToken);

  auto corpus = parse("b\tO\na\tO\nc\tO\nc\tO\n\nb\tO\nd\tO\n");
  Vocabulary v = build_vocab(corpus);
  // b, c twice (tie: lexicographic), then a, d once
  CHECK(v.tokens() == std::vector<std::string>{"[UNK]", "b", "c", "a", "d"});
  for (const auto& t : v.tokens()) CHECK(v.token(v.id(t)) == t);
  CHECK(v.id("zzz") == Vocabulary::kUnknownId);
  CHECK_THROWS_AS(v.token(99), LookupError);

  Vocabulary pruned = build_vocab(corpus, 2);
  CHECK(pruned.tokens() == std::vector<std::string>{"[UNK]", "b", "c"});
  CHECK(pruned.id("a") == Vocabulary::kUnknownId);

  std::stringstream io;
  v.save(io);
  CHECK(Vocabulary::load(io) == v);

  index_examples(corpus, v);
  CHECK(corpus[0].tokens == std::vector<std::size_t>{1, 3, 2, 2});
}

TEST_CASE("dataset serialize → parse → serialize is stable") {
  auto corpus = synth_generate({5, 30, 60, 48});
  std::ostringstream first;
  serialize_dataset(first, corpus);
  auto parsed = parse(first.str());
  REQUIRE(parsed.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(parsed[i].raw_tokens == corpus[i].raw_tokens);
    CHECK(parsed[i].labels == corpus[i].labels);
  }
  std::ostringstream second;
  serialize_dataset(second, parsed);
  CHECK(first.str() == second.str());
}

TEST_CASE("synth: determinism, BIO validity, lengths") {
  auto a = synth_generate({9, 200, 200, 48}), b = synth_generate({9, 200, 200, 48});
  auto c = synth_generate({10, 200, 200, 48});
  std::ostringstream sa, sb, sc;
  serialize_dataset(sa, a);
  serialize_dataset(sb, b);
  serialize_dataset(sc, c);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
  for (const auto& ex : a) {
    CHECK(ex.size() >= 24);
    CHECK(ex.size() <= 48);
    CHECK(ex.tokens.size() == ex.size());
    CHECK(ex.raw_tokens.size() == ex.size());
    CHECK(validate_bio(ex.labels).empty());
  }
}

TEST_CASE("synth: label proportions within three points of the reference") {
  auto corpus = synth_generate({1, 10000, 200, 48});
  double counts[kNumLabels] = {};
  double total = 0.0;
  for (const auto& ex : corpus) {
    for (auto l : ex.labels) counts[l] += 1.0;
    total += static_cast<double>(ex.size());
  }
  const double ref_total = kReferenceB + kReferenceI + kReferenceO;
  CHECK(std::abs(counts[B] / total - kReferenceB / ref_total) < 0.03);
  CHECK(std::abs(counts[I] / total - kReferenceI / ref_total) < 0.03);
  CHECK(std::abs(counts[O] / total - kReferenceO / ref_total) < 0.03);
}

TEST_CASE("synth: bigram baseline certifies learnability") {
  auto split = split_dataset(synth_generate({3, 2000, 200, 48}), 1);
  oracle::BigramBaseline baseline(split.train);
  CHECK(baseline.rumor_recall(split.test) > 0.8);
}

TEST_CASE("synth: configuration errors") {
  CHECK_THROWS_AS(synth_generate({1, 0, 200, 48}), ConfigError);
  CHECK_THROWS_AS(synth_generate({1, 10, 19, 48}), ConfigError);
  CHECK_THROWS_AS(synth_generate({1, 10, 200, 20}), ConfigError);
  CHECK(synth_token(0) == "一");
}

}  // TEST_SUITE
