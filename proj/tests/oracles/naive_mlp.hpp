#pragma once

// Straightforward MLP forward pass over nested weight matrices; used as the
// reference function for finite-difference gradient checks.

#include <cmath>
#include <span>
#include <vector>

#include "trl/mlp.hpp"

namespace trl::oracle {

inline std::vector<double> naive_forward(const MlpParams& p, std::span<const double> input) {
  const auto& sizes = p.layout.sizes();
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    std::vector<double> y(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = p.values[p.layout.bias_offset(l) + o];
      for (std::size_t i = 0; i < in; ++i) acc += p.values[p.layout.weight_offset(l) + o * in + i] * x[i];
      y[o] = (l + 2 < sizes.size()) ? std::tanh(acc) : acc;
    }
    x = std::move(y);
  }
  return x;
}

/// Central difference of f with respect to every entry of params.values.
template <class F>
std::vector<double> central_difference(MlpParams params, F&& f, double h) {
  std::vector<double> g(params.values.size());
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double saved = params.values[i];
    params.values[i] = saved + h;
    const double up = f(params);
    params.values[i] = saved - h;
    const double down = f(params);
    params.values[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace trl::oracle
