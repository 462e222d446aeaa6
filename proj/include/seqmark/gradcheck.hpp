#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seqmark/autodiff.hpp"
#include "seqmark/optim.hpp"

namespace seqmark {

/// |analytic − numeric| / max(1, |numeric|).
double gradient_relative_error(double analytic, double numeric);

/// Max relative error between `analytic` and central differences of `f`
/// around `theta`. Throws NumericError if f is non-finite at any probe.
double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<const double> theta, std::span<const double> analytic,
                  double eps = 1e-5);

struct GroupCheck {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GroupCheck> groups;

  double max_rel_error() const;
  const GroupCheck& worst() const;
};

/// Checks every element of every parameter in `params`. `loss` must rebuild
/// the scalar objective from the current parameter values on each call.
GradCheckReport grad_check(const std::function<Var()>& loss, const ParamList& params,
                           double eps = 1e-5);

}  // namespace seqmark
