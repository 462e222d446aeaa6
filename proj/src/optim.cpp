#include "seqmark/optim.hpp"

#include <cmath>

namespace seqmark {

namespace {

Tensor zeros(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return Tensor(shape, std::vector<double>(n, 0.0));
}

}  // namespace

AdamState::AdamState(const Shape& shape) : m(zeros(shape)), v(zeros(shape)) {}

void adam_step(Tensor& theta, const Tensor& grad, AdamState& state, const AdamHyper& hyper) {
  if (!theta.same_shape(grad) || !theta.same_shape(state.m)) {
    throw DimensionError("adam_step: parameter " + shape_string(theta.shape()) + ", gradient " +
                         shape_string(grad.shape()) + ", state " + shape_string(state.m.shape()));
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    theta[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var.value().size();
  return n;
}

void zero_grads(const ParamList& params) {
  for (const auto& p : params) {
    Var v = p.var;
    v.zero_grad();
  }
}

Adam::Adam(const ParamList& params, AdamHyper hyper) : params_(params), hyper_(hyper) {
  states_.reserve(params_.size());
  for (const auto& p : params_) states_.emplace_back(p.var.shape());
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var v = params_[i].var;
    adam_step(v.mutable_value(), v.grad(), states_[i], hyper_);
  }
}

}  // namespace seqmark
