#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqmark/autodiff.hpp"
#include "seqmark/tensor.hpp"

namespace seqmark {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers for one parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;

  explicit AdamState(const Shape& shape);
};

/// One bias-corrected Adam update of `theta` in place.
void adam_step(Tensor& theta, const Tensor& grad, AdamState& state, const AdamHyper& hyper);

/// A named trainable tensor.
struct NamedParam {
  std::string name;
  Var var;
};

using ParamList = std::vector<NamedParam>;

std::size_t parameter_count(const ParamList& params);
void zero_grads(const ParamList& params);

/// Adam over a fixed parameter list; parameters without an incoming
/// gradient are stepped with g = 0, matching dense framework behaviour.
class Adam {
 public:
  Adam(const ParamList& params, AdamHyper hyper);

  void step();
  const AdamHyper& hyper() const { return hyper_; }

 private:
  ParamList params_;
  std::vector<AdamState> states_;
  AdamHyper hyper_;
};

}  // namespace seqmark
