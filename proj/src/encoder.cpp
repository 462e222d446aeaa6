#include "seqmark/encoder.hpp"

#include <cmath>
#include <numeric>

#include "seqmark/init.hpp"

namespace seqmark {

EncoderParams init_encoder(const EncoderConfig& c, Rng& rng) {
  if (c.vocab_size == 0 || c.d_model == 0 || c.d_ff == 0 || c.max_len == 0) {
    throw ConfigError("encoder: vocab_size, d_model, d_ff and max_len must be positive");
  }
  EncoderParams p;
  // Embedding rows use the row width as fan-in.
  p.embeddings.token = init_uniform(c.vocab_size, c.d_model, c.d_model, rng);
  p.embeddings.segment = init_uniform(2, c.d_model, c.d_model, rng);
  p.embeddings.position = init_uniform(c.max_len, c.d_model, c.d_model, rng);
  for (std::size_t l = 0; l < c.depth; ++l) {
    EncoderLayerParams layer;
    layer.w_q = init_uniform(c.d_model, c.d_model, c.d_model, rng);
    layer.w_k = init_uniform(c.d_model, c.d_model, c.d_model, rng);
    layer.w_v = init_uniform(c.d_model, c.d_model, c.d_model, rng);
    layer.w1 = init_uniform(c.d_model, c.d_ff, c.d_model, rng);
    layer.b1 = init_uniform(1, c.d_ff, c.d_model, rng);
    layer.w2 = init_uniform(c.d_ff, c.d_model, c.d_ff, rng);
    layer.b2 = init_uniform(1, c.d_model, c.d_ff, rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void collect_params(const EncoderParams& p, const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "token_embedding", p.embeddings.token});
  out.push_back({prefix + "segment_embedding", p.embeddings.segment});
  out.push_back({prefix + "position_embedding", p.embeddings.position});
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    const std::string pre = prefix + "layer" + std::to_string(l) + ".";
    out.push_back({pre + "w_q", L.w_q});
    out.push_back({pre + "w_k", L.w_k});
    out.push_back({pre + "w_v", L.w_v});
    out.push_back({pre + "ff_w1", L.w1});
    out.push_back({pre + "ff_b1", L.b1});
    out.push_back({pre + "ff_w2", L.w2});
    out.push_back({pre + "ff_b2", L.b2});
  }
}

Var embed(const EmbeddingTables& tables, std::span<const std::size_t> tokens,
          std::span<const std::size_t> segments) {
  if (tokens.size() != segments.size()) {
    throw DimensionError("embed: " + std::to_string(tokens.size()) + " tokens but " +
                         std::to_string(segments.size()) + " segment ids");
  }
  std::vector<std::size_t> positions(tokens.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  return gather_rows(tables.token, tokens) + gather_rows(tables.segment, segments) +
         gather_rows(tables.position, positions);
}

Var self_attention_layer(const Var& h, const EncoderLayerParams& p) {
  Var q = matmul(h, p.w_q);
  Var k = matmul(h, p.w_k);
  Var v = matmul(h, p.w_v);
  const double d_k = static_cast<double>(p.w_k.cols());
  Var weights = softmax_rows(scale(matmul_nt(q, k), 1.0 / std::sqrt(d_k)));
  return matmul(weights, v);
}

Var feed_forward(const Var& h, const EncoderLayerParams& p) {
  return linear(relu(linear(h, p.w1, p.b1)), p.w2, p.b2);
}

Var encode(const EncoderParams& p, std::span<const std::size_t> tokens,
           std::span<const std::size_t> segments) {
  Var h = embed(p.embeddings, tokens, segments);
  for (const auto& layer : p.layers) {
    h = h + self_attention_layer(h, layer);
    h = h + feed_forward(h, layer);
  }
  return h;
}

}  // namespace seqmark
