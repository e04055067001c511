#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pla/tensor.hpp"

namespace pla {

// Compares analytic gradients of a scalar-valued graph builder against
// central finite differences. `build` must construct the graph from the
// given parameter leaves each time it is called. Probes up to
// `max_probes` coordinates per parameter (all of them when the tensor is
// small) and returns the worst relative error.
inline double grad_check(
    const std::function<DiffTensor<double>()>& build,
    std::vector<DiffTensor<double>>& params, double h, int max_probes,
    Rng& rng) {
  auto loss = build();
  require(loss.size() == 1, ErrorCode::shape,
          "grad_check: builder must return a scalar");
  loss.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    require(p.requires_grad(), ErrorCode::shape,
            "grad_check: parameter does not require grad");
    analytic.push_back(p.grad());
  }

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    std::vector<std::size_t> coords;
    if (static_cast<int>(p.size()) <= max_probes) {
      for (std::size_t j = 0; j < p.size(); ++j) coords.push_back(j);
    } else {
      for (int k = 0; k < max_probes; ++k)
        coords.push_back(static_cast<std::size_t>(rng.index(p.size())));
    }
    for (std::size_t j : coords) {
      double orig = p.data()[j];
      p.data()[j] = orig + h;
      double fp = build().scalar();
      p.data()[j] = orig - h;
      double fm = build().scalar();
      p.data()[j] = orig;
      double numeric = (fp - fm) / (2.0 * h);
      double a = analytic[pi][j];
      double denom = std::max({std::abs(a), std::abs(numeric), 1.0});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace pla
