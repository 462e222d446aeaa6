#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqmark/bimamba.hpp"
#include "seqmark/config.hpp"
#include "seqmark/crf.hpp"
#include "seqmark/data.hpp"
#include "seqmark/encoder.hpp"
#include "seqmark/head.hpp"

namespace seqmark {

/// Full tagger: encoder → bidirectional extractor → fusion → emission head
/// → CRF (or per-token softmax), wired according to the ablation switches.
class Model {
 public:
  /// Deterministic initialization from config.seed.
  static Model assemble(const ModelConfig& config);

  // Parameters are shared handles, so copies would alias; use clone().
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  /// Independent model with the same config and parameter values.
  Model clone() const;

  const ModelConfig& config() const { return config_; }
  /// Every trainable tensor with a stable dotted name, in a fixed order.
  const ParamList& params() const { return params_; }
  std::size_t parameter_count() const { return seqmark::parameter_count(params_); }

  /// Rumor features O (N × d_output) for a token sequence.
  Var features(std::span<const std::size_t> tokens) const;
  /// N × 3 emission scores.
  Var emissions(std::span<const std::size_t> tokens) const;
  /// crf_nll when the CRF is on, token cross-entropy otherwise.
  Var loss(std::span<const std::size_t> tokens, std::span<const std::size_t> gold) const;
  Var loss_from_emissions(const Var& emissions, std::span<const std::size_t> gold) const;
  /// Viterbi when the CRF is on, per-position argmax otherwise.
  std::vector<std::size_t> decode(std::span<const std::size_t> tokens) const;
  std::vector<std::size_t> decode_emissions(const Tensor& emissions) const;

  const std::optional<CrfParams>& crf() const { return crf_; }

  /// Copies of all parameter values, in params() order.
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  explicit Model(const ModelConfig& config);

  ModelConfig config_;
  EncoderParams encoder_;
  std::optional<BiMamba2Params> bimamba_;
  std::optional<LstmParams> lstm_;
  Var lstm_fc_in_w_, lstm_fc_in_b_;
  Var concat_w_, concat_b_;  // fusion by concatenation: 2·d_output → d_output
  std::optional<SkipNetParams> skip_;
  std::optional<DirectHeadParams> direct_;
  std::optional<CrfParams> crf_;
  ParamList params_;
};

/// A model together with the vocabulary its token ids refer to.
struct Tagger {
  Model model;
  Vocabulary vocab;
};

}  // namespace seqmark
