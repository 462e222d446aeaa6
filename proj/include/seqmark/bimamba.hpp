#pragma once

#include <string>
#include <utility>

#include "seqmark/autodiff.hpp"
#include "seqmark/mamba2.hpp"
#include "seqmark/optim.hpp"

namespace seqmark {

struct BiMamba2Params {
  Var fc_in_w, fc_in_b;  // d_model × d_adj, 1 × d_adj
  Mamba2Params forward;
  Mamba2Params backward;
};

/// Gate maps of one LSTM direction; the four gates (input, forget, output,
/// candidate) are packed along columns in that order.
struct LstmDirection {
  Var w_x;  // d_in × 4h
  Var w_h;  // h × 4h
  Var b;    // 1 × 4h
};

struct LstmParams {
  LstmDirection forward;
  LstmDirection backward;
};

/// fc_in map shared by both extractors. d_adj is the width of the two
/// directional streams' input.
BiMamba2Params init_bimamba2(std::size_t d_model, const Mamba2Config& block, Rng& rng);
LstmParams init_lstm(std::size_t d_in, std::size_t hidden, Rng& rng);
void collect_params(const BiMamba2Params& p, const std::string& prefix, ParamList& out);
void collect_params(const LstmParams& p, const std::string& prefix, ParamList& out);

struct DirectionalOutputs {
  Var forward;
  Var backward;
};

Var fc_in(const Var& t, const Var& w, const Var& b);

/// Forward block on x; backward block on the time-reversed x, with its
/// output reversed again so row t of both streams describes position t.
DirectionalOutputs bidirectional_pass(const Var& x_adjusted, const BiMamba2Params& p);

/// Attention weights produced inside the fusion, exposed for inspection.
struct FusionResult {
  Var output;
  Var w_forward;
  Var w_backward;
};

/// S = x_f·x_bᵀ/√d;  O = softmax_rows(S)·x_f + softmax_rows(Sᵀ)·x_b.
FusionResult dot_product_fusion_detailed(const Var& x_forward, const Var& x_backward);
Var dot_product_fusion(const Var& x_forward, const Var& x_backward);

Var att_bimamba2_forward(const Var& t, const BiMamba2Params& p);

/// One LSTM recurrence over the rows of x (left to right); returns N × h.
Var lstm_scan(const Var& x, const LstmDirection& p);

/// Drop-in replacement for the Mamba2 pair: forward LSTM on x, backward LSTM
/// on the reversed x with its output re-reversed.
DirectionalOutputs bilstm_extractor(const Var& x_adjusted, const LstmParams& p);

}  // namespace seqmark
