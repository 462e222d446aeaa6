#include "seqmark/head.hpp"

#include "seqmark/init.hpp"
#include "seqmark/labels.hpp"

namespace seqmark {

SkipNetParams init_skipnet(std::size_t d, std::size_t h1, std::size_t h2, Rng& rng) {
  if (d == 0 || h1 == 0 || h2 == 0) throw ConfigError("skip network widths must be positive");
  SkipNetParams p;
  p.layer1_w = init_uniform(d, h1, d, rng);
  p.layer1_b = init_uniform(1, h1, d, rng);
  p.layer2_w = init_uniform(d + h1, h2, d + h1, rng);
  p.layer2_b = init_uniform(1, h2, d + h1, rng);
  p.out_w = init_uniform(h2, kNumLabels, h2, rng);
  p.out_b = init_uniform(1, kNumLabels, h2, rng);
  return p;
}

DirectHeadParams init_direct_head(std::size_t d, Rng& rng) {
  return {init_uniform(d, kNumLabels, d, rng), init_uniform(1, kNumLabels, d, rng)};
}

void collect_params(const SkipNetParams& p, const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "layer1_w", p.layer1_w});
  out.push_back({prefix + "layer1_b", p.layer1_b});
  out.push_back({prefix + "layer2_w", p.layer2_w});
  out.push_back({prefix + "layer2_b", p.layer2_b});
  out.push_back({prefix + "out_w", p.out_w});
  out.push_back({prefix + "out_b", p.out_b});
}

void collect_params(const DirectHeadParams& p, const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "w", p.w});
  out.push_back({prefix + "b", p.b});
}

Var skip_projection(const Var& features, const SkipNetParams& p) {
  Var x1 = silu(linear(features, p.layer1_w, p.layer1_b));
  Var x2 = silu(linear(concat_cols(features, x1), p.layer2_w, p.layer2_b));
  return linear(x2, p.out_w, p.out_b);
}

Var direct_projection(const Var& features, const DirectHeadParams& p) {
  return linear(features, p.w, p.b);
}

}  // namespace seqmark
