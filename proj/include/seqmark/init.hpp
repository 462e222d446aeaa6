#pragma once

#include <cmath>

#include "seqmark/autodiff.hpp"
#include "seqmark/tensor.hpp"

namespace seqmark {

/// Trainable rows×cols tensor drawn uniformly from ±1/√fan_in.
inline Var init_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  return Var::parameter(random_uniform(rows, cols, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
}

inline Var init_constant(std::size_t rows, std::size_t cols, double value) {
  return Var::parameter(Tensor(rows, cols, value));
}

}  // namespace seqmark
