#include "seqmark/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace seqmark {

namespace {

double finite_or_throw(double v, std::size_t index) {
  if (!std::isfinite(v)) {
    throw NumericError("grad_check: objective is non-finite at probe of element " +
                       std::to_string(index));
  }
  return v;
}

}  // namespace

double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<const double> theta, std::span<const double> analytic, double eps) {
  if (theta.size() != analytic.size()) {
    throw DimensionError("grad_check: " + std::to_string(theta.size()) + " parameters but " +
                         std::to_string(analytic.size()) + " gradient entries");
  }
  std::vector<double> probe(theta.begin(), theta.end());
  finite_or_throw(f(probe), 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = finite_or_throw(f(probe), i);
    probe[i] = saved - eps;
    const double down = finite_or_throw(f(probe), i);
    probe[i] = saved;
    worst = std::max(worst, gradient_relative_error(analytic[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_rel_error);
  return m;
}

const GroupCheck& GradCheckReport::worst() const {
  if (groups.empty()) throw std::logic_error("empty gradient-check report");
  return *std::max_element(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.max_rel_error < b.max_rel_error;
  });
}

GradCheckReport grad_check(const std::function<Var()>& loss, const ParamList& params, double eps) {
  zero_grads(params);
  {
    Var l = loss();
    finite_or_throw(l.item(), 0);
    l.backward();
  }
  GradCheckReport report;
  NoGradGuard no_grad;
  for (const auto& p : params) {
    Var v = p.var;
    const Tensor analytic = v.grad();
    GroupCheck group{p.name};
    Tensor& value = v.mutable_value();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      const double up = finite_or_throw(loss().item(), i);
      value[i] = saved - eps;
      const double down = finite_or_throw(loss().item(), i);
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      group.max_rel_error = std::max(group.max_rel_error, gradient_relative_error(analytic[i], numeric));
      group.max_abs_analytic = std::max(group.max_abs_analytic, std::abs(analytic[i]));
      group.max_abs_numeric = std::max(group.max_abs_numeric, std::abs(numeric));
    }
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace seqmark
