#pragma once

#include <span>
#include <string>
#include <vector>

#include "seqmark/autodiff.hpp"
#include "seqmark/optim.hpp"

namespace seqmark {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 32;
  std::size_t d_ff = 64;
  std::size_t depth = 2;
  std::size_t max_len = 128;
};

struct EmbeddingTables {
  Var token;     // vocab_size × d_model
  Var segment;   // 2 × d_model
  Var position;  // max_len × d_model
};

struct EncoderLayerParams {
  Var w_q, w_k, w_v;  // d_model × d_model
  Var w1, b1;         // d_model × d_ff, 1 × d_ff
  Var w2, b2;         // d_ff × d_model, 1 × d_model
};

struct EncoderParams {
  EmbeddingTables embeddings;
  std::vector<EncoderLayerParams> layers;
};

EncoderParams init_encoder(const EncoderConfig& config, Rng& rng);
void collect_params(const EncoderParams& p, const std::string& prefix, ParamList& out);

/// Row i = token[tokens[i]] + segment[segments[i]] + position[i].
Var embed(const EmbeddingTables& tables, std::span<const std::size_t> tokens,
          std::span<const std::size_t> segments);

/// Single-head scaled dot-product self-attention, softmax(QKᵀ/√d)·V.
Var self_attention_layer(const Var& h, const EncoderLayerParams& p);

/// max(0, h·W1 + b1)·W2 + b2 applied to every row.
Var feed_forward(const Var& h, const EncoderLayerParams& p);

/// Embedding followed by one residual attention step and one residual
/// feed-forward step per layer.
Var encode(const EncoderParams& p, std::span<const std::size_t> tokens,
           std::span<const std::size_t> segments);

}  // namespace seqmark
