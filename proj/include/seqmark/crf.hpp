#pragma once

#include <span>
#include <string>
#include <vector>

#include "seqmark/autodiff.hpp"
#include "seqmark/labels.hpp"
#include "seqmark/optim.hpp"

namespace seqmark {

/// Linear-chain CRF over the three labels.
///   transitions(i, j): score of label i followed by label j
///   start[j], end[j]:  score of the first / last label being j
struct CrfParams {
  Var transitions;  // 3 × 3
  Var start;        // 1 × 3
  Var end;          // 1 × 3
};

CrfParams init_crf(Rng& rng);
CrfParams make_crf(Tensor transitions, Tensor start, Tensor end);
CrfParams zero_crf();
void collect_params(const CrfParams& p, const std::string& prefix, ParamList& out);

/// start[y₀] + Σ emissions[t][y_t] + Σ transitions[y_{t−1}][y_t] + end[y_{N−1}].
double crf_score(const Tensor& emissions, std::span<const std::size_t> path, const CrfParams& crf);

/// log Σ_paths exp(score), by the forward recursion in log space.
double crf_log_partition(const Tensor& emissions, const CrfParams& crf);

/// Per-position label marginals P(y_t = ℓ), N × 3.
Tensor crf_marginals(const Tensor& emissions, const CrfParams& crf);

/// Highest-scoring path. At every max the lowest label index wins. With
/// `constrained`, a path may not start with I-Rumor or step O → I-Rumor.
std::vector<std::size_t> viterbi_decode(const Tensor& emissions, const CrfParams& crf,
                                        bool constrained = false);

/// log Z − score(gold); differentiable in the emissions and all CRF tensors.
Var crf_nll(const Var& emissions, std::span<const std::size_t> gold, const CrfParams& crf);

/// −Σ_t log softmax(emissions[t])[gold[t]].
Var token_ce_loss(const Var& emissions, std::span<const std::size_t> gold);

/// Per-row argmax, lowest index on ties.
std::vector<std::size_t> argmax_decode(const Tensor& emissions);

}  // namespace seqmark
