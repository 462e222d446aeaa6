#include <algorithm>
#include <cmath>

#include "seqmark/data.hpp"
#include "seqmark/tensor.hpp"

namespace seqmark {

namespace {

constexpr std::size_t kPhraseMin = 14;
constexpr std::size_t kPhraseMax = 24;
constexpr double kPhraseMean = 0.5 * (kPhraseMin + kPhraseMax);
constexpr std::size_t kMaxPhrases = 3;
constexpr double kChainFollow = 0.7;    // continuation follows the successor chain
constexpr double kPhraseNoise = 0.04;   // interior phrase token drawn from background
constexpr double kDecoy = 0.02;         // isolated reserved token outside phrases

struct Alphabet {
  std::size_t background;  // ids [0, background)
  std::size_t triggers;    // ids [background, background + triggers)
  std::size_t vocab;       // continuations fill the rest

  std::size_t continuation_begin() const { return background + triggers; }
  std::size_t continuations() const { return vocab - continuation_begin(); }
};

// rumor share of all tokens, B and I together
double target_rumor_fraction() { return (kReferenceB + kReferenceI) / (kReferenceB + kReferenceI + kReferenceO); }

std::size_t successor(const Alphabet& a, std::size_t id) {
  const std::size_t k = a.continuations();
  const std::size_t off = id >= a.continuation_begin() ? id - a.continuation_begin() : 0;
  return a.continuation_begin() + (off * 7 + 3) % k;
}

}  // namespace

std::string synth_token(std::size_t id) {
  // U+4E00 + id, encoded as UTF-8 (three bytes for the whole basic CJK block)
  const auto cp = static_cast<std::uint32_t>(0x4E00 + id);
  if (cp > 0xFFFF) throw ConfigError("synthetic vocabulary too large for the CJK block");
  std::string s;
  s += static_cast<char>(0xE0 | (cp >> 12));
  s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
  s += static_cast<char>(0x80 | (cp & 0x3F));
  return s;
}

std::vector<LabeledExample> synth_generate(const SynthSpec& spec) {
  if (spec.count == 0) throw ConfigError("synth: count must be at least 1");
  if (spec.vocab_size < 20) throw ConfigError("synth: vocab_size must be at least 20");
  if (spec.vocab_size > 20000) throw ConfigError("synth: vocab_size must be at most 20000");
  if (spec.max_len < kSynthMinMaxLen) {
    throw ConfigError("synth: max_len " + std::to_string(spec.max_len) + " cannot hold " +
                      std::to_string(kPhraseMax) + "-token phrases at the reference label "
                      "proportions; need at least " + std::to_string(kSynthMinMaxLen));
  }
  const std::size_t reserved = std::max<std::size_t>(6, spec.vocab_size * 3 / 10);
  Alphabet alpha{spec.vocab_size - reserved, std::max<std::size_t>(2, reserved / 4), spec.vocab_size};

  const auto B = label_index(Label::BRumor), I = label_index(Label::IRumor), O = label_index(Label::O);
  const std::size_t min_len = (spec.max_len + 1) / 2;
  Rng rng(spec.seed);
  std::vector<LabeledExample> out;
  out.reserve(spec.count);

  for (std::size_t e = 0; e < spec.count; ++e) {
    const std::size_t len = min_len + rng.below(spec.max_len - min_len + 1);
    // Expected phrase count keeps the corpus-wide rumor share on target.
    const double mu = target_rumor_fraction() * static_cast<double>(len) / kPhraseMean;
    std::size_t k = static_cast<std::size_t>(mu);
    if (rng.bernoulli(mu - std::floor(mu))) ++k;
    k = std::min(k, kMaxPhrases);

    std::vector<std::size_t> phrase_len(k);
    std::size_t planted = 0;
    for (auto& p : phrase_len) {
      p = kPhraseMin + rng.below(kPhraseMax - kPhraseMin + 1);
      planted += p;
    }
    while (planted > len) {  // only reachable for very short draws; shrink the last phrase set
      planted -= phrase_len.back();
      phrase_len.pop_back();
    }
    // Split the background budget into k + 1 gaps (gaps may be empty, so
    // two phrases can touch: B directly after I).
    const std::size_t background = len - planted;
    std::vector<std::size_t> cuts(phrase_len.size());
    for (auto& c : cuts) c = rng.below(background + 1);
    std::sort(cuts.begin(), cuts.end());

    LabeledExample ex;
    ex.labels.assign(len, O);
    std::vector<std::size_t> ids(len);
    std::size_t pos = 0, prev_cut = 0;
    for (std::size_t p = 0; p < phrase_len.size(); ++p) {
      pos += cuts[p] - prev_cut;
      prev_cut = cuts[p];
      const std::size_t n = phrase_len[p];
      ex.labels[pos] = B;
      ids[pos] = alpha.background + rng.below(alpha.triggers);
      std::size_t prev = alpha.continuation_begin() + rng.below(alpha.continuations());
      bool last_noise = false;
      for (std::size_t j = 1; j < n; ++j) {
        ex.labels[pos + j] = I;
        // Noise stays away from both phrase edges and never repeats.
        if (j >= 2 && j + 2 < n && !last_noise && rng.bernoulli(kPhraseNoise)) {
          ids[pos + j] = rng.below(alpha.background);
          last_noise = true;
          continue;
        }
        last_noise = false;
        prev = rng.bernoulli(kChainFollow)
                   ? successor(alpha, prev)
                   : alpha.continuation_begin() + rng.below(alpha.continuations());
        ids[pos + j] = prev;
      }
      pos += n;
    }
    // Background fill; a decoy needs two background-labelled neighbours on
    // each side so it cannot be read as part of a phrase.
    std::vector<bool> decoy(len, false);
    for (std::size_t i = 0; i < len; ++i) {
      if (ex.labels[i] != O) continue;
      bool isolated = i >= 2 && i + 2 < len;
      for (std::size_t j = i - std::min<std::size_t>(i, 2); isolated && j <= i + 2; ++j) {
        if (j != i && (ex.labels[j] != O || decoy[j])) isolated = false;
      }
      if (isolated && rng.bernoulli(kDecoy)) {
        decoy[i] = true;
        ids[i] = alpha.continuation_begin() + rng.below(alpha.continuations());
      } else {
        ids[i] = rng.below(alpha.background);
      }
    }
    ex.tokens = ids;
    ex.raw_tokens.reserve(len);
    for (auto id : ids) ex.raw_tokens.push_back(synth_token(id));
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace seqmark
