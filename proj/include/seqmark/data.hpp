#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqmark/labels.hpp"

namespace seqmark {

struct LabeledExample {
  std::vector<std::size_t> tokens;  // vocabulary ids; 0 (unknown) until indexed
  std::vector<std::size_t> labels;  // Label codes
  std::vector<std::string> raw_tokens;

  std::size_t size() const { return labels.size(); }
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  std::vector<LabeledExample> test;
};

struct ParseError : std::runtime_error {
  ParseError(std::size_t line, const std::string& what);
  std::size_t line;
};

/// Token-per-line dataset: `token<TAB>label`, blank line between sequences.
/// Token ids are left at 0; see index_examples.
std::vector<LabeledExample> parse_dataset(std::istream& in);
std::vector<LabeledExample> load_dataset(const std::string& path);
void serialize_dataset(std::ostream& out, std::span<const LabeledExample> examples);
void save_dataset(const std::string& path, std::span<const LabeledExample> examples);

/// Positions i with labels[i] = I-Rumor and (i = 0 or labels[i−1] = O).
/// Empty means the sequence is valid BIO.
std::vector<std::size_t> validate_bio(std::span<const std::size_t> labels);

/// Seeded shuffle, then ⌊0.8n⌋ train, ⌊0.1n⌋ validation, the rest test.
DatasetSplit split_dataset(std::vector<LabeledExample> examples, std::uint64_t seed);

enum class Tokenization { Character, Whitespace };

Tokenization parse_tokenization(std::string_view name);
std::string_view tokenization_name(Tokenization t);

/// Character mode yields one token per UTF-8 code point, skipping ASCII
/// whitespace; whitespace mode splits on runs of ASCII whitespace.
std::vector<std::string> tokenize(std::string_view text, Tokenization mode);

class Vocabulary {
 public:
  static constexpr std::size_t kUnknownId = 0;
  static constexpr std::string_view kUnknownToken = "[UNK]";

  Vocabulary();
  /// First entry is taken as the unknown token.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Id 0 is the unknown token; the rest ordered by descending frequency,
/// ties lexicographic. Tokens seen fewer than min_count times are dropped.
Vocabulary build_vocab(std::span<const LabeledExample> examples, std::size_t min_count = 1);

/// Fills `tokens` from `raw_tokens`.
void index_examples(std::span<LabeledExample> examples, const Vocabulary& vocab);

// ---- synthetic corpus ------------------------------------------------------

/// Label proportions of the reference corpus (B : I : O token counts).
inline constexpr double kReferenceB = 3370.0;
inline constexpr double kReferenceI = 60409.0;
inline constexpr double kReferenceO = 247640.0;

struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t count = 1000;
  std::size_t vocab_size = 200;
  std::size_t max_len = 48;
};

/// Smallest max_len the generator accepts.
inline constexpr std::size_t kSynthMinMaxLen = 48;

/// Background token streams with planted rumor phrases. Phrases open with a
/// trigger token and continue through a reserved sub-vocabulary that
/// follows a successor chain; rare in-phrase background tokens and isolated
/// out-of-phrase reserved tokens make some labels context dependent.
/// Token strings are CJK ideographs so the corpus reads like the
/// character-tokenized text the tagger is meant for.
std::vector<LabeledExample> synth_generate(const SynthSpec& spec);

/// Synthetic token id → token string.
std::string synth_token(std::size_t id);

}  // namespace seqmark
