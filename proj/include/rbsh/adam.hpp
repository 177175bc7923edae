#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbsh/types.hpp"

namespace rbsh::ad {

/// ADAM accumulators; one moment pair per parameter tensor.
template <class S>
struct AdamState {
  std::vector<Mat<S>> m, v;
  std::int64_t t = 0;
  S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);

  static AdamState zeros_like(const std::vector<const Mat<S>*>& params) {
    AdamState st;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const auto* p : params) {
      st.m.push_back(Mat<S>::Zero(p->rows(), p->cols()));
      st.v.push_back(Mat<S>::Zero(p->rows(), p->cols()));
    }
    return st;
  }
};

/// One bias-corrected ADAM update over all parameters.
template <class S>
void adam_step(const std::vector<Mat<S>*>& params, const std::vector<const Mat<S>*>& grads,
               AdamState<S>& state, S lr) {
  check_numeric(params.size() == grads.size() && params.size() == state.m.size(),
                "adam_step: parameter/gradient/state count mismatch");
  ++state.t;
  const S c1 = S(1) / (S(1) - S(std::pow(double(state.beta1), double(state.t))));
  const S c2 = S(1) / (S(1) - S(std::pow(double(state.beta2), double(state.t))));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat<S>& p = *params[i];
    const Mat<S>& g = *grads[i];
    check_numeric(p.rows() == g.rows() && p.cols() == g.cols(),
                  "adam_step: gradient shape mismatch at parameter " + std::to_string(i));
    state.m[i] = state.beta1 * state.m[i] + (S(1) - state.beta1) * g;
    state.v[i].array() =
        state.beta2 * state.v[i].array() + (S(1) - state.beta2) * g.array().square();
    p.array() -=
        lr * (state.m[i].array() * c1) / ((state.v[i].array() * c2).sqrt() + state.eps);
    check_numeric(p.allFinite(),
                  "adam_step: non-finite parameter after update at tensor " + std::to_string(i));
  }
}

}  // namespace rbsh::ad
