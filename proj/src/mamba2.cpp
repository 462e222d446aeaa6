#include "seqmark/mamba2.hpp"

#include <cmath>
#include <vector>

#include "seqmark/init.hpp"

namespace seqmark {

void Mamba2Config::validate() const {
  if (d_model == 0 || d_inner == 0 || d_state == 0 || kernel == 0 || d_output == 0) {
    throw ConfigError("mamba2: d_model, d_inner, d_state, kernel and d_output must be positive");
  }
}

Mamba2Params init_mamba2(const Mamba2Config& c, Rng& rng) {
  c.validate();
  Mamba2Params p;
  p.w_z = init_uniform(c.d_model, c.d_inner, c.d_model, rng);
  p.b_z = init_uniform(1, c.d_inner, c.d_model, rng);
  p.conv = init_uniform(c.kernel, c.d_inner, c.kernel, rng);
  // A ∈ [−1, −0.1]: per-channel memory from a few to tens of steps at Δ ≈ 0.7.
  Tensor a(1, c.d_inner);
  for (double& v : a.values()) v = rng.uniform(std::log(0.1), 0.0);
  p.a_log = Var::parameter(std::move(a));
  p.w_dt = init_uniform(c.d_inner, c.d_inner, c.d_inner, rng);
  p.b_dt = init_uniform(1, c.d_inner, c.d_inner, rng);
  p.w_b = init_uniform(c.d_inner, c.d_state, c.d_inner, rng);
  p.w_c = init_uniform(c.d_inner, c.d_state, c.d_inner, rng);
  p.norm_gain = init_constant(1, c.d_inner, 1.0);
  p.w_out = init_uniform(c.d_inner, c.d_output, c.d_inner, rng);
  p.b_out = init_uniform(1, c.d_output, c.d_inner, rng);
  return p;
}

void collect_params(const Mamba2Params& p, const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "w_z", p.w_z});
  out.push_back({prefix + "b_z", p.b_z});
  out.push_back({prefix + "conv", p.conv});
  out.push_back({prefix + "a_log", p.a_log});
  out.push_back({prefix + "w_dt", p.w_dt});
  out.push_back({prefix + "b_dt", p.b_dt});
  out.push_back({prefix + "w_b", p.w_b});
  out.push_back({prefix + "w_c", p.w_c});
  out.push_back({prefix + "norm_gain", p.norm_gain});
  out.push_back({prefix + "w_out", p.w_out});
  out.push_back({prefix + "b_out", p.b_out});
}

Var input_projection(const Var& x, const Mamba2Params& p) { return linear(x, p.w_z, p.b_z); }

Var causal_depthwise_conv(const Var& z, const Var& kernels) {
  if (kernels.cols() != z.cols()) {
    throw DimensionError("causal_depthwise_conv: kernels " + shape_string(kernels.shape()) +
                         " vs input " + shape_string(z.shape()));
  }
  const std::size_t n = z.rows(), d = z.cols(), k = kernels.rows();
  const Tensor& zv = z.value();
  const Tensor& kv = kernels.value();
  Tensor out(n, d);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      // source row t − (k − 1) + j; rows before 0 are padding
      if (t + j + 1 < k) continue;
      const std::size_t s = t + j + 1 - k;
      for (std::size_t c = 0; c < d; ++c) out(t, c) += kv(j, c) * zv(s, c);
    }
  }
  return make_result(
      std::move(out), {z, kernels},
      [n, d, k](Node& node) {
        const auto& pz = node.parents[0];
        const auto& pk = node.parents[1];
        for (std::size_t t = 0; t < n; ++t) {
          for (std::size_t j = 0; j < k; ++j) {
            if (t + j + 1 < k) continue;
            const std::size_t s = t + j + 1 - k;
            if (pz->requires_grad) {
              Tensor& gz = pz->grad_buffer();
              for (std::size_t c = 0; c < d; ++c) gz(s, c) += node.grad(t, c) * pk->value(j, c);
            }
            if (pk->requires_grad) {
              Tensor& gk = pk->grad_buffer();
              for (std::size_t c = 0; c < d; ++c) gk(j, c) += node.grad(t, c) * pz->value(s, c);
            }
          }
        }
      },
      "causal_depthwise_conv");
}

Var conv_silu(const Var& z, const Var& kernels) { return silu(causal_depthwise_conv(z, kernels)); }

Var selective_scan(const Var& x, const Var& delta, const Var& a_log, const Var& b, const Var& c) {
  const std::size_t n = x.rows(), d = x.cols(), s = b.cols();
  if (delta.shape() != x.shape() || a_log.rows() != 1 || a_log.cols() != d || b.rows() != n ||
      c.rows() != n || c.cols() != s) {
    throw DimensionError("selective_scan: x " + shape_string(x.shape()) + ", delta " +
                         shape_string(delta.shape()) + ", a_log " + shape_string(a_log.shape()) +
                         ", B " + shape_string(b.shape()) + ", C " + shape_string(c.shape()));
  }
  const Tensor& xv = x.value();
  const Tensor& dv = delta.value();
  const Tensor& bv = b.value();
  const Tensor& cv = c.value();
  std::vector<double> a(d);
  for (std::size_t ch = 0; ch < d; ++ch) a[ch] = -std::exp(a_log.value()[ch]);

  // states[t] holds h_t for all channels (d × s), kept for the reverse sweep.
  const bool keep = grad_enabled() && (x.requires_grad() || delta.requires_grad() || a_log.requires_grad() ||
                                       b.requires_grad() || c.requires_grad());
  std::vector<double> states(keep ? n * d * s : 0);
  std::vector<double> h(d * s, 0.0);
  Tensor y(n, d);
  for (std::size_t t = 0; t < n; ++t) {
    const double* bt = bv.data() + t * s;
    const double* ct = cv.data() + t * s;
    for (std::size_t ch = 0; ch < d; ++ch) {
      const double dt = dv(t, ch);
      const double decay = std::exp(dt * a[ch]);
      const double drive = dt * xv(t, ch);
      double* hc = h.data() + ch * s;
      double acc = 0.0;
      for (std::size_t k = 0; k < s; ++k) {
        hc[k] = decay * hc[k] + drive * bt[k];
        acc += ct[k] * hc[k];
      }
      if (!std::isfinite(acc)) {
        throw NumericError("selective_scan: non-finite state at position " + std::to_string(t) +
                           ", channel " + std::to_string(ch));
      }
      y(t, ch) = acc;
    }
    if (keep) std::copy(h.begin(), h.end(), states.begin() + static_cast<std::ptrdiff_t>(t * d * s));
  }

  return make_result(
      std::move(y), {x, delta, a_log, b, c},
      [n, d, s, a = std::move(a), states = std::move(states)](Node& node) {
        const auto& px = node.parents[0];
        const auto& pd = node.parents[1];
        const auto& pa = node.parents[2];
        const auto& pb = node.parents[3];
        const auto& pc = node.parents[4];
        const Tensor& xv = px->value;
        const Tensor& dv = pd->value;
        const Tensor& bv = pb->value;
        const Tensor& cv = pc->value;
        Tensor gx(n, d), gdelta(n, d), gb(n, s), gc(n, s);
        std::vector<double> ga(d, 0.0);
        std::vector<double> gh(d * s, 0.0);  // dL/dh_t flowing back from later steps
        for (std::size_t t = n; t-- > 0;) {
          const double* ht = states.data() + t * d * s;
          const double* hprev = t ? states.data() + (t - 1) * d * s : nullptr;
          const double* bt = bv.data() + t * s;
          const double* ct = cv.data() + t * s;
          for (std::size_t ch = 0; ch < d; ++ch) {
            const double gy = node.grad(t, ch);
            const double dt = dv(t, ch);
            const double decay = std::exp(dt * a[ch]);
            const double xt = xv(t, ch);
            double* ghc = gh.data() + ch * s;
            const double* hc = ht + ch * s;
            double g_decay = 0.0, g_drive = 0.0;
            for (std::size_t k = 0; k < s; ++k) {
              gc(t, k) += gy * hc[k];
              ghc[k] += gy * ct[k];
              if (hprev) g_decay += ghc[k] * hprev[ch * s + k];
              g_drive += ghc[k] * bt[k];
              gb(t, k) += ghc[k] * dt * xt;
              ghc[k] *= decay;
            }
            // decay = exp(Δ·A): ∂/∂Δ = decay·A, ∂/∂A = decay·Δ
            gdelta(t, ch) += g_drive * xt + g_decay * decay * a[ch];
            gx(t, ch) += g_drive * dt;
            ga[ch] += g_decay * decay * dt;
          }
        }
        auto accumulate = [](const NodePtr& p, const Tensor& g) {
          if (!p->requires_grad) return;
          Tensor& buf = p->grad_buffer();
          for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
        };
        accumulate(px, gx);
        accumulate(pd, gdelta);
        accumulate(pb, gb);
        accumulate(pc, gc);
        if (pa->requires_grad) {
          // A = −exp(a_log) ⇒ ∂A/∂a_log = A
          Tensor& buf = pa->grad_buffer();
          for (std::size_t ch = 0; ch < d; ++ch) buf[ch] += ga[ch] * a[ch];
        }
      },
      "selective_scan");
}

Var selective_ssm_scan(const Var& x, const Mamba2Params& p) {
  Var delta = softplus(linear(x, p.w_dt, p.b_dt));
  return selective_scan(x, delta, p.a_log, matmul(x, p.w_b), matmul(x, p.w_c));
}

Var mamba2_block(const Var& x, const Mamba2Params& p) {
  Var activated = conv_silu(input_projection(x, p), p.conv);
  Var residual = selective_ssm_scan(activated, p) + activated;
  return linear(rmsnorm_rows(residual, p.norm_gain), p.w_out, p.b_out);
}

}  // namespace seqmark
