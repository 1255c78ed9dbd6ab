#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "hsic_infogan/autodiff.hpp"
#include "hsic_infogan/errors.hpp"

namespace hsic_infogan {

/// Builds a scalar loss on the given tape from the current parameter values.
using LossFn = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `f` against central differences with
/// step `h`, coordinate by coordinate. Returns the maximum relative error
/// |a - b| / max(1e-12, |a| + |b|). Parameter values are restored on return
/// and their gradients are left zeroed.
inline double grad_check(const LossFn& f, std::span<Parameter* const> params, double h) {
  if (!(h > 0.0)) throw ConfigError("grad_check: step must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }
  auto eval = [&f] {
    Tape tape;
    return f(tape).value().item();
  };
  double worst = 0.0;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval();
      p->value[i] = orig - h;
      const double down = eval();
      p->value[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
    p->zero_grad();
  }
  return worst;
}

}  // namespace hsic_infogan
