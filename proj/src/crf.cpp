#include "seqmark/crf.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "seqmark/init.hpp"

namespace seqmark {

namespace {

constexpr std::size_t L = kNumLabels;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_emissions(const Tensor& em, const char* op) {
  if (em.cols() != L) {
    throw DimensionError(std::string(op) + ": emissions must be N×3, got " + shape_string(em.shape()));
  }
}

void check_path(std::span<const std::size_t> path, std::size_t n, const char* op) {
  if (path.size() != n) {
    throw DimensionError(std::string(op) + ": path length " + std::to_string(path.size()) +
                         " vs " + std::to_string(n) + " emission rows");
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (path[t] >= L) {
      throw LookupError(std::string(op) + ": label " + std::to_string(path[t]) + " at position " +
                        std::to_string(t) + " is not one of 0, 1, 2");
    }
  }
}

double lse3(double a, double b, double c) {
  std::array<double, 3> v{a, b, c};
  return logsumexp(v);
}

struct ForwardBackward {
  std::vector<double> alpha;  // N × L, log space, includes emission at t
  std::vector<double> beta;   // N × L, log space, excludes emission at t
  double log_z = 0.0;
};

ForwardBackward forward_backward(const Tensor& em, const Tensor& tr, const Tensor& st,
                                 const Tensor& en, bool with_beta) {
  const std::size_t n = em.rows();
  ForwardBackward fb;
  fb.alpha.resize(n * L);
  for (std::size_t j = 0; j < L; ++j) fb.alpha[j] = st[j] + em(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      const double* prev = fb.alpha.data() + (t - 1) * L;
      fb.alpha[t * L + j] =
          em(t, j) + lse3(prev[0] + tr(0, j), prev[1] + tr(1, j), prev[2] + tr(2, j));
    }
  }
  const double* last = fb.alpha.data() + (n - 1) * L;
  fb.log_z = lse3(last[0] + en[0], last[1] + en[1], last[2] + en[2]);
  if (with_beta) {
    fb.beta.resize(n * L);
    for (std::size_t i = 0; i < L; ++i) fb.beta[(n - 1) * L + i] = en[i];
    for (std::size_t t = n - 1; t-- > 0;) {
      const double* next = fb.beta.data() + (t + 1) * L;
      for (std::size_t i = 0; i < L; ++i) {
        fb.beta[t * L + i] = lse3(tr(i, 0) + em(t + 1, 0) + next[0], tr(i, 1) + em(t + 1, 1) + next[1],
                                  tr(i, 2) + em(t + 1, 2) + next[2]);
      }
    }
  }
  return fb;
}

}  // namespace

CrfParams init_crf(Rng& rng) {
  return {init_uniform(L, L, L, rng), init_uniform(1, L, L, rng), init_uniform(1, L, L, rng)};
}

CrfParams make_crf(Tensor transitions, Tensor start, Tensor end) {
  return {Var::parameter(std::move(transitions)), Var::parameter(std::move(start)),
          Var::parameter(std::move(end))};
}

CrfParams zero_crf() { return make_crf(Tensor(L, L), Tensor(1, L), Tensor(1, L)); }

void collect_params(const CrfParams& p, const std::string& prefix, ParamList& out) {
  out.push_back({prefix + "transitions", p.transitions});
  out.push_back({prefix + "start", p.start});
  out.push_back({prefix + "end", p.end});
}

double crf_score(const Tensor& em, std::span<const std::size_t> path, const CrfParams& crf) {
  check_emissions(em, "crf_score");
  check_path(path, em.rows(), "crf_score");
  const Tensor& tr = crf.transitions.value();
  double s = crf.start.value()[path[0]] + crf.end.value()[path.back()];
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += em(t, path[t]);
    if (t) s += tr(path[t - 1], path[t]);
  }
  return s;
}

double crf_log_partition(const Tensor& em, const CrfParams& crf) {
  check_emissions(em, "crf_log_partition");
  return forward_backward(em, crf.transitions.value(), crf.start.value(), crf.end.value(), false).log_z;
}

Tensor crf_marginals(const Tensor& em, const CrfParams& crf) {
  check_emissions(em, "crf_marginals");
  auto fb = forward_backward(em, crf.transitions.value(), crf.start.value(), crf.end.value(), true);
  Tensor p(em.rows(), L);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(fb.alpha[i] + fb.beta[i] - fb.log_z);
  return p;
}

std::vector<std::size_t> viterbi_decode(const Tensor& em, const CrfParams& crf, bool constrained) {
  check_emissions(em, "viterbi_decode");
  const std::size_t n = em.rows();
  Tensor tr = crf.transitions.value();
  Tensor st = crf.start.value();
  const Tensor& en = crf.end.value();
  if (constrained) {
    const auto b = label_index(Label::IRumor), o = label_index(Label::O);
    st[b] = kNegInf;
    tr(o, b) = kNegInf;
  }
  std::vector<double> delta(L);
  std::vector<std::size_t> back(n * L, 0);
  for (std::size_t j = 0; j < L; ++j) delta[j] = st[j] + em(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    std::vector<double> next(L);
    for (std::size_t j = 0; j < L; ++j) {
      std::size_t best = 0;
      double best_score = delta[0] + tr(0, j);
      for (std::size_t i = 1; i < L; ++i) {
        const double s = delta[i] + tr(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      back[t * L + j] = best;
      next[j] = best_score + em(t, j);
    }
    delta = std::move(next);
  }
  std::size_t last = 0;
  double best_score = delta[0] + en[0];
  for (std::size_t j = 1; j < L; ++j) {
    if (delta[j] + en[j] > best_score) {
      best_score = delta[j] + en[j];
      last = j;
    }
  }
  std::vector<std::size_t> path(n);
  path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t * L + path[t]];
  return path;
}

Var crf_nll(const Var& emissions, std::span<const std::size_t> gold, const CrfParams& crf) {
  const Tensor& em = emissions.value();
  check_emissions(em, "crf_nll");
  check_path(gold, em.rows(), "crf_nll");
  const double log_z = crf_log_partition(em, crf);
  const double loss = log_z - crf_score(em, gold, crf);
  return make_result(
      Tensor(1, 1, loss), {emissions, crf.transitions, crf.start, crf.end},
      [gold = std::vector<std::size_t>(gold.begin(), gold.end())](Node& out) {
        const auto& pe = out.parents[0];
        const auto& pt = out.parents[1];
        const auto& ps = out.parents[2];
        const auto& pn = out.parents[3];
        const Tensor& em = pe->value;
        const Tensor& tr = pt->value;
        const std::size_t n = em.rows();
        const double g = out.grad[0];
        auto fb = forward_backward(em, tr, ps->value, pn->value, true);
        auto marginal = [&](std::size_t t, std::size_t j) {
          return std::exp(fb.alpha[t * L + j] + fb.beta[t * L + j] - fb.log_z);
        };
        if (pe->requires_grad) {
          Tensor& ge = pe->grad_buffer();
          for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t j = 0; j < L; ++j) ge(t, j) += g * marginal(t, j);
            ge(t, gold[t]) -= g;
          }
        }
        if (ps->requires_grad) {
          Tensor& gs = ps->grad_buffer();
          for (std::size_t j = 0; j < L; ++j) gs[j] += g * marginal(0, j);
          gs[gold[0]] -= g;
        }
        if (pn->requires_grad) {
          Tensor& gn = pn->grad_buffer();
          for (std::size_t j = 0; j < L; ++j) gn[j] += g * marginal(n - 1, j);
          gn[gold[n - 1]] -= g;
        }
        if (pt->requires_grad) {
          Tensor& gt = pt->grad_buffer();
          for (std::size_t t = 0; t + 1 < n; ++t) {
            for (std::size_t i = 0; i < L; ++i) {
              for (std::size_t j = 0; j < L; ++j) {
                const double xi = std::exp(fb.alpha[t * L + i] + tr(i, j) + em(t + 1, j) +
                                           fb.beta[(t + 1) * L + j] - fb.log_z);
                gt(i, j) += g * xi;
              }
            }
            gt(gold[t], gold[t + 1]) -= g;
          }
        }
      },
      "crf_nll");
}

Var token_ce_loss(const Var& emissions, std::span<const std::size_t> gold) {
  const Tensor& em = emissions.value();
  check_emissions(em, "token_ce_loss");
  check_path(gold, em.rows(), "token_ce_loss");
  double loss = 0.0;
  for (std::size_t t = 0; t < em.rows(); ++t) loss -= em(t, gold[t]) - logsumexp(em.row(t));
  return make_result(
      Tensor(1, 1, loss), {emissions},
      [gold = std::vector<std::size_t>(gold.begin(), gold.end())](Node& out) {
        const auto& pe = out.parents[0];
        Tensor p = softmax_rows(pe->value);
        Tensor& ge = pe->grad_buffer();
        const double g = out.grad[0];
        for (std::size_t t = 0; t < p.rows(); ++t) {
          for (std::size_t j = 0; j < L; ++j) ge(t, j) += g * p(t, j);
          ge(t, gold[t]) -= g;
        }
      },
      "token_ce_loss");
}

std::vector<std::size_t> argmax_decode(const Tensor& em) {
  check_emissions(em, "argmax_decode");
  std::vector<std::size_t> out(em.rows());
  for (std::size_t t = 0; t < em.rows(); ++t) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < L; ++j)
      if (em(t, j) > em(t, best)) best = j;
    out[t] = best;
  }
  return out;
}

}  // namespace seqmark
