#include "seqmark/bimamba.hpp"

#include <cmath>
#include <vector>

#include "seqmark/init.hpp"

namespace seqmark {

BiMamba2Params init_bimamba2(std::size_t d_model, const Mamba2Config& block, Rng& rng) {
  block.validate();
  BiMamba2Params p;
  p.fc_in_w = init_uniform(d_model, block.d_model, d_model, rng);
  p.fc_in_b = init_uniform(1, block.d_model, d_model, rng);
  p.forward = init_mamba2(block, rng);
  p.backward = init_mamba2(block, rng);
  return p;
}

namespace {

LstmDirection init_direction(std::size_t d_in, std::size_t hidden, Rng& rng) {
  return {init_uniform(d_in, 4 * hidden, hidden, rng), init_uniform(hidden, 4 * hidden, hidden, rng),
          init_uniform(1, 4 * hidden, hidden, rng)};
}

}  // namespace

LstmParams init_lstm(std::size_t d_in, std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.forward = init_direction(d_in, hidden, rng);
  p.backward = init_direction(d_in, hidden, rng);
  return p;
}

void collect_params(const BiMamba2Params& p, const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "fc_in_w", p.fc_in_w});
  out.push_back({prefix + "fc_in_b", p.fc_in_b});
  collect_params(p.forward, prefix + "forward.", out);
  collect_params(p.backward, prefix + "backward.", out);
}

void collect_params(const LstmParams& p, const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "forward.w_x", p.forward.w_x});
  out.push_back({prefix + "forward.w_h", p.forward.w_h});
  out.push_back({prefix + "forward.b", p.forward.b});
  out.push_back({prefix + "backward.w_x", p.backward.w_x});
  out.push_back({prefix + "backward.w_h", p.backward.w_h});
  out.push_back({prefix + "backward.b", p.backward.b});
}

Var fc_in(const Var& t, const Var& w, const Var& b) { return linear(t, w, b); }

DirectionalOutputs bidirectional_pass(const Var& x_adjusted, const BiMamba2Params& p) {
  Var fwd = mamba2_block(x_adjusted, p.forward);
  Var bwd = flip_rows(mamba2_block(flip_rows(x_adjusted), p.backward));
  return {fwd, bwd};
}

FusionResult dot_product_fusion_detailed(const Var& x_forward, const Var& x_backward) {
  if (x_forward.shape() != x_backward.shape()) {
    throw DimensionError("dot_product_fusion: " + shape_string(x_forward.shape()) + " vs " +
                         shape_string(x_backward.shape()));
  }
  const double d = static_cast<double>(x_forward.cols());
  Var scores = scale(matmul_nt(x_forward, x_backward), 1.0 / std::sqrt(d));
  Var w_forward = softmax_rows(scores);
  Var w_backward = softmax_rows(transpose(scores));
  Var out = matmul(w_forward, x_forward) + matmul(w_backward, x_backward);
  return {out, w_forward, w_backward};
}

Var dot_product_fusion(const Var& x_forward, const Var& x_backward) {
  return dot_product_fusion_detailed(x_forward, x_backward).output;
}

Var att_bimamba2_forward(const Var& t, const BiMamba2Params& p) {
  auto streams = bidirectional_pass(fc_in(t, p.fc_in_w, p.fc_in_b), p);
  return dot_product_fusion(streams.forward, streams.backward);
}

Var lstm_scan(const Var& x, const LstmDirection& p) {
  const std::size_t hidden = p.w_h.rows();
  if (p.w_x.rows() != x.cols() || p.w_x.cols() != 4 * hidden || p.w_h.cols() != 4 * hidden) {
    throw DimensionError("lstm_scan: input " + shape_string(x.shape()) + ", w_x " +
                         shape_string(p.w_x.shape()) + ", w_h " + shape_string(p.w_h.shape()));
  }
  Var projected = linear(x, p.w_x, p.b);  // input contribution for every step at once
  Var h(Tensor(1, hidden));
  Var c(Tensor(1, hidden));
  std::vector<Var> outputs;
  outputs.reserve(x.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    Var gates = row(projected, t) + matmul(h, p.w_h);
    Var i = sigmoid(slice_cols(gates, 0, hidden));
    Var f = sigmoid(slice_cols(gates, hidden, hidden));
    Var o = sigmoid(slice_cols(gates, 2 * hidden, hidden));
    Var g = tanh(slice_cols(gates, 3 * hidden, hidden));
    c = mul(f, c) + mul(i, g);
    h = mul(o, tanh(c));
    outputs.push_back(h);
  }
  return stack_rows(outputs);
}

DirectionalOutputs bilstm_extractor(const Var& x_adjusted, const LstmParams& p) {
  return {lstm_scan(x_adjusted, p.forward), flip_rows(lstm_scan(flip_rows(x_adjusted), p.backward))};
}

}  // namespace seqmark
