#pragma once

// Central finite-difference check over every entry of a set of parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vpg/autodiff.hpp"

namespace vpg::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  double max_abs_err_small = 0.0;  // over entries below `tiny`
  std::size_t checked = 0;
  std::string worst;  // "param[i]" of the worst entry
  double worst_numeric = 0.0, worst_analytic = 0.0;
};

/// `loss` builds a scalar on a fresh tape from the current parameter values.
/// Entries where both gradients are below `tiny` are compared in absolute terms
/// only (relative error is meaningless there).
inline GradCheckResult grad_check(const std::function<ad::Var(ad::Tape&)>& loss, std::vector<ad::Parameter*> params,
                                  double h = 1e-6, double tiny = 1e-7) {
  for (auto* p : params) p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  GradCheckResult res;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double orig = p->value.data()[i];
      p->value.data()[i] = orig + h;
      double up;
      {
        ad::Tape t;
        up = loss(t).item();
      }
      p->value.data()[i] = orig - h;
      double down;
      {
        ad::Tape t;
        down = loss(t).item();
      }
      p->value.data()[i] = orig;
      double numeric = (up - down) / (2 * h);
      double analytic = p->grad.data()[i];
      double abs_err = std::abs(numeric - analytic);
      double scale = std::max(std::abs(numeric), std::abs(analytic));
      double rel = scale < tiny ? 0.0 : abs_err / scale;
      ++res.checked;
      res.max_abs_err = std::max(res.max_abs_err, abs_err);
      if (scale < tiny) res.max_abs_err_small = std::max(res.max_abs_err_small, abs_err);
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = p->name + "[" + std::to_string(i) + "]";
        res.worst_numeric = numeric;
        res.worst_analytic = analytic;
      }
    }
  }
  return res;
}

}  // namespace vpg::testing
