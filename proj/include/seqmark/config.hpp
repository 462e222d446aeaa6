#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

#include "seqmark/data.hpp"
#include "seqmark/mamba2.hpp"

namespace seqmark {

enum class Extractor { Mamba2, Lstm };

/// Model shape and the five ablation switches. The default is the full
/// architecture at desk scale.
struct ModelConfig {
  std::size_t vocab_size = 0;  // filled from the vocabulary at training time
  std::size_t d_model = 32;
  std::size_t encoder_depth = 2;
  std::size_t d_ff = 64;
  std::size_t d_adj = 32;
  std::size_t d_inner = 64;
  std::size_t d_state = 4;
  std::size_t conv_kernel = 3;
  std::size_t d_output = 32;
  std::size_t skip_h1 = 64;
  std::size_t skip_h2 = 32;
  std::size_t max_len = 128;
  Extractor extractor = Extractor::Mamba2;
  bool use_encoder = true;
  bool use_attention_fusion = true;
  bool use_skip_connection = true;
  bool use_crf = true;
  bool constrained_decoding = false;
  Tokenization tokenization = Tokenization::Character;
  std::uint64_t seed = 1;

  Mamba2Config block() const { return {d_adj, d_inner, d_state, conv_kernel, d_output}; }
  /// Throws ConfigError naming the offending fields.
  void validate() const;

  /// Widths used by the gradient gate: N = 6, every width ≤ 8.
  static ModelConfig gradcheck_preset();
  /// Skip-network widths 512/256 as in the reference setup.
  static ModelConfig paper_preset();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 30;
  std::size_t patience = 10;
  std::uint64_t seed = 1;        // per-epoch shuffle
  std::uint64_t split_seed = 1;  // 8:1:1 split
  std::size_t min_count = 1;

  static constexpr double kPaperLearningRate = 1e-5;

  void validate() const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::size_t gradcheck_length = 6;
};

enum class Ablation { None, IrBert, IrMamba2, IrDotPAtt, IrSkipCon, IrCrf };

Ablation parse_ablation(std::string_view name);
std::string_view ablation_name(Ablation a);
void apply_ablation(ModelConfig& config, Ablation a);

/// Flat `key=value` lines; `#` starts a comment. Unknown keys, malformed
/// lines and unparsable values raise ConfigError with the line number.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& config);

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace seqmark
