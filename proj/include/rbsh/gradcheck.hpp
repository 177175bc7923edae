#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rbsh/types.hpp"

namespace rbsh::ad {

struct GradCheckReport {
  double max_rel_error = 0;
  bool pass = false;
  std::size_t checked = 0;
  int worst_param = -1;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0, worst_numeric = 0;
};

/// Central-difference verification of analytic gradients.
///
/// `fn(params)` must be deterministic (noise sources frozen) and return the
/// loss together with the analytic gradient per parameter; the finite
/// difference probes reuse only the loss. `exclude(param, flat_index)` can
/// mask entries sitting on non-differentiable kinks.
template <class S, class Fn>
GradCheckReport check_gradients(
    Fn&& fn, std::vector<Mat<S>> params, double h, double tol,
    const std::function<bool(std::size_t, Eigen::Index)>& exclude = nullptr) {
  auto [loss0, analytic] = fn(params);
  (void)loss0;
  check_numeric(analytic.size() == params.size(), "check_gradients: gradient count mismatch");

  GradCheckReport rep;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index i = 0; i < params[p].size(); ++i) {
      if (exclude && exclude(p, i)) continue;
      const S saved = params[p].data()[i];
      params[p].data()[i] = saved + S(h);
      const double up = fn(params).first;
      params[p].data()[i] = saved - S(h);
      const double dn = fn(params).first;
      params[p].data()[i] = saved;

      const double numeric = (up - dn) / (2 * h);
      const double a = double(analytic[p].data()[i]);
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++rep.checked;
      if (err > rep.max_rel_error) {
        rep.max_rel_error = err;
        rep.worst_param = int(p);
        rep.worst_index = i;
        rep.worst_analytic = a;
        rep.worst_numeric = numeric;
      }
    }
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

}  // namespace rbsh::ad
