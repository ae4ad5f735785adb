#include "trl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trl/errors.hpp"

namespace trl {

MlpLayout::MlpLayout(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorCode::kShapeMismatch, "an MLP needs at least input and output sizes");
  for (const auto s : sizes_) {
    if (s == 0) throw Error(ErrorCode::kShapeMismatch, "MLP layer sizes must be positive");
  }
  const std::size_t layers = sizes_.size() - 1;
  weight_offset_.resize(layers);
  bias_offset_.resize(layers);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    weight_offset_[l] = offset;
    offset += sizes_[l] * sizes_[l + 1];
    bias_offset_[l] = offset;
    offset += sizes_[l + 1];
  }
  count_ = offset;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool GradientSet::all_finite() const { return trl::all_finite(values); }

MlpParams make_mlp(std::vector<std::size_t> sizes, std::mt19937_64& rng, double output_scale) {
  MlpParams params{MlpLayout(std::move(sizes))};
  const auto& layout = params.layout;
  for (std::size_t l = 0; l < layout.num_layers(); ++l) {
    const auto fan_in = static_cast<double>(layout.sizes()[l]);
    const auto fan_out = static_cast<double>(layout.sizes()[l + 1]);
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    if (l + 1 == layout.num_layers()) limit *= output_scale;
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t n = layout.sizes()[l] * layout.sizes()[l + 1];
    for (std::size_t i = 0; i < n; ++i) params.values[layout.weight_offset(l) + i] = dist(rng);
  }
  return params;
}

void mlp_forward(const MlpParams& params, std::span<const double> input, ForwardCache& cache) {
  const auto& layout = params.layout;
  if (input.size() != layout.input_size()) {
    throw Error(ErrorCode::kShapeMismatch, "MLP input width " + std::to_string(input.size()) + ", expected " +
                                               std::to_string(layout.input_size()));
  }
  const std::size_t layers = layout.num_layers();
  cache.activations.resize(layers + 1);
  cache.activations[0].assign(input.begin(), input.end());
  const double* p = params.values.data();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = layout.sizes()[l];
    const std::size_t out = layout.sizes()[l + 1];
    const double* w = p + layout.weight_offset(l);
    const double* b = p + layout.bias_offset(l);
    const auto& x = cache.activations[l];
    auto& y = cache.activations[l + 1];
    y.resize(out);
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * x[i];
      y[o] = hidden ? std::tanh(z) : z;
    }
  }
}

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input) {
  ForwardCache cache;
  mlp_forward(params, input, cache);
  return std::move(cache.activations.back());
}

void mlp_backward_accumulate(const MlpParams& params, const ForwardCache& cache, std::span<const double> cotangent,
                             GradientSet& grads) {
  const auto& layout = params.layout;
  if (cotangent.size() != layout.output_size()) {
    throw Error(ErrorCode::kShapeMismatch, "cotangent width " + std::to_string(cotangent.size()) + ", expected " +
                                               std::to_string(layout.output_size()));
  }
  if (!(grads.layout == layout)) throw Error(ErrorCode::kShapeMismatch, "gradient set shape differs from params");
  const std::size_t layers = layout.num_layers();
  std::vector<double> delta(cotangent.begin(), cotangent.end());
  std::vector<double> prev;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = layout.sizes()[l];
    const std::size_t out = layout.sizes()[l + 1];
    const double* w = params.values.data() + layout.weight_offset(l);
    double* gw = grads.values.data() + layout.weight_offset(l);
    double* gb = grads.values.data() + layout.bias_offset(l);
    const auto& x = cache.activations[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    // x holds tanh activations of the layer below.
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - x[i] * x[i];
    delta.swap(prev);
  }
}

ForwardBackward mlp_forward_backward(const MlpParams& params, std::span<const double> input,
                                     std::span<const double> cotangent) {
  ForwardCache cache;
  mlp_forward(params, input, cache);
  ForwardBackward result{cache.activations.back(), GradientSet(params.layout)};
  mlp_backward_accumulate(params, cache, cotangent, result.grads);
  return result;
}

}  // namespace trl
