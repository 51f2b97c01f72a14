#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wavex/nn/layers.hpp"

namespace wavex::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;       ///< "name[index]" of the worst entry
  std::size_t checked = 0;
  std::size_t failures = 0;  ///< entries above the tolerance
  double tolerance = 1e-4;
  double floor = 0.0;  ///< denominator floor actually used

  bool ok() const { return failures == 0; }
};

/// Compares reverse-mode gradients of a scalar graph against central finite
/// differences. Relative error per entry: |a - f| / max(|a|, |f|, floor), where
/// floor is raised to 1e5 * eps * max(1, |L|) / step. Below that level the
/// difference quotient is dominated by rounding in L (e.g. biases feeding an
/// instance norm, whose exact gradient is 0).
inline GradCheckReport grad_check(const std::function<Tensor<double>()>& graph, ParamList<double>& params,
                                  double tolerance = 1e-4, double step = 1e-5, double floor = 1e-6) {
  GradCheckReport rep;
  rep.tolerance = tolerance;
  params.zero_grad();
  Tensor<double> out = graph();
  if (out.numel() != 1) fail(Errc::ShapeMismatch, "grad_check needs a scalar graph");
  out.backward();
  floor = std::max(floor, 1e5 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(out.item())) / step);
  rep.floor = floor;
  for (auto& [name, p] : params.items) {
    const std::vector<double> analytic = p.grad();
    for (std::size_t i = 0; i < p.numel(); ++i) {
      double& x = p.values()[i];
      const double saved = x;
      double plus, minus;
      {
        NoGradGuard ng;
        x = saved + step;
        plus = graph().item();
        x = saved - step;
        minus = graph().item();
      }
      x = saved;
      const double fd = (plus - minus) / (2.0 * step);
      const double rel = std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), floor});
      ++rep.checked;
      if (rel > tolerance) ++rep.failures;
      if (rel > rep.max_rel_error || rep.worst.empty()) {
        rep.max_rel_error = std::max(rel, rep.max_rel_error);
        rep.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

}  // namespace wavex::nn
