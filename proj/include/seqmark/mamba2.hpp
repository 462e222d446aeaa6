#pragma once

#include <string>

#include "seqmark/autodiff.hpp"
#include "seqmark/optim.hpp"

namespace seqmark {

struct Mamba2Config {
  std::size_t d_model = 32;
  std::size_t d_inner = 64;
  std::size_t d_state = 4;
  std::size_t kernel = 3;
  std::size_t d_output = 32;

  void validate() const;
};

/// Learned tensors of one directional block. Row-vector convention: every
/// map is applied as x·W (+ b) to an N×width input.
struct Mamba2Params {
  Var w_z, b_z;      // d_model × d_inner, 1 × d_inner
  Var conv;          // kernel × d_inner, one causal filter per channel
  Var a_log;         // 1 × d_inner; A = −exp(a_log)
  Var w_dt, b_dt;    // d_inner × d_inner, 1 × d_inner
  Var w_b, w_c;      // d_inner × d_state
  Var norm_gain;     // 1 × d_inner
  Var w_out, b_out;  // d_inner × d_output, 1 × d_output
};

Mamba2Params init_mamba2(const Mamba2Config& config, Rng& rng);
void collect_params(const Mamba2Params& p, const std::string& prefix, ParamList& out);

/// Z = X·W_z + b_z.
Var input_projection(const Var& x, const Mamba2Params& p);

/// Per-channel causal convolution with left zero padding (no activation).
Var causal_depthwise_conv(const Var& z, const Var& kernels);

/// SiLU(causal_depthwise_conv(z)).
Var conv_silu(const Var& z, const Var& kernels);

/// Core recurrence on precomputed selectivity inputs:
///   h_t[c] = exp(Δ[t,c]·A[c])·h_{t−1}[c] + Δ[t,c]·B[t]·x[t,c],  y[t,c] = C[t]·h_t[c]
/// with A = −exp(a_log). One left-to-right pass; throws NumericError naming
/// the position if the state stops being finite.
Var selective_scan(const Var& x, const Var& delta, const Var& a_log, const Var& b, const Var& c);

/// Computes Δ = softplus(x·W_Δ + b_Δ), B = x·W_B, C = x·W_C and runs the scan.
Var selective_ssm_scan(const Var& x, const Mamba2Params& p);

/// projection → conv+SiLU → scan → residual → RMS norm → output map.
Var mamba2_block(const Var& x, const Mamba2Params& p);

}  // namespace seqmark
