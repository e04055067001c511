#pragma once

#include <cmath>
#include <vector>

#include "pla/tensor.hpp"

namespace pla {

template <class T>
struct AdamState {
  long step_count = 0;
  T learning_rate = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
};

// Bias-corrected Adam update, in place on the parameter tensors.
// Moment buffers are created lazily on the first call.
template <class T>
void adam_step(std::vector<DiffTensor<T>>& params, AdamState<T>& state) {
  if (state.first_moment.empty()) {
    for (auto& p : params) {
      state.first_moment.emplace_back(p.size(), T(0));
      state.second_moment.emplace_back(p.size(), T(0));
    }
  }
  require(state.first_moment.size() == params.size(), ErrorCode::shape,
          "adam_step: state does not match parameter list");
  state.step_count += 1;
  T t = static_cast<T>(state.step_count);
  T bc1 = T(1) - std::pow(state.beta1, t);
  T bc2 = T(1) - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    require(state.first_moment[i].size() == p.size(), ErrorCode::shape,
            "adam_step: moment shape mismatch");
    const auto& g = p.grad();
    require(g.size() == p.size(), ErrorCode::shape,
            "adam_step: missing gradient");
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    auto& x = p.data();
    for (std::size_t j = 0; j < x.size(); ++j) {
      m[j] = state.beta1 * m[j] + (T(1) - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (T(1) - state.beta2) * g[j] * g[j];
      T mhat = m[j] / bc1;
      T vhat = v[j] / bc2;
      x[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace pla
