#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace trl {

/// Offsets of each layer's weight matrix (row-major, out x in) and bias
/// inside one flat parameter vector.
class MlpLayout {
 public:
  MlpLayout() = default;
  /// sizes = {input, hidden..., output}; at least two entries.
  explicit MlpLayout(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const { return count_; }
  std::size_t weight_offset(std::size_t layer) const { return weight_offset_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return bias_offset_[layer]; }

  friend bool operator==(const MlpLayout& a, const MlpLayout& b) { return a.sizes_ == b.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::size_t count_ = 0;
};

/// Multilayer perceptron with tanh hidden units and a linear output layer.
struct MlpParams {
  MlpLayout layout;
  std::vector<double> values;

  MlpParams() = default;
  explicit MlpParams(MlpLayout l) : layout(std::move(l)), values(layout.parameter_count(), 0.0) {}
};

/// Partial derivatives, shape-identical to the MlpParams they differentiate.
struct GradientSet {
  MlpLayout layout;
  std::vector<double> values;

  GradientSet() = default;
  explicit GradientSet(MlpLayout l) : layout(std::move(l)), values(layout.parameter_count(), 0.0) {}

  void zero() { std::fill(values.begin(), values.end(), 0.0); }
  bool all_finite() const;
};

/// Glorot-uniform hidden layers; the output layer is scaled by output_scale.
MlpParams make_mlp(std::vector<std::size_t> sizes, std::mt19937_64& rng, double output_scale = 1.0);

/// Activations of one forward pass, kept for a later backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> activations;  // [0] = input, back() = output

  std::span<const double> output() const { return activations.back(); }
};

void mlp_forward(const MlpParams& params, std::span<const double> input, ForwardCache& cache);
std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input);

/// Adds d<output, cotangent>/d(params) into `grads`.
void mlp_backward_accumulate(const MlpParams& params, const ForwardCache& cache, std::span<const double> cotangent,
                             GradientSet& grads);

struct ForwardBackward {
  std::vector<double> output;
  GradientSet grads;
};

/// Exact forward pass plus the analytic gradient of <output, cotangent>.
/// Throws kShapeMismatch when input or cotangent widths are wrong.
ForwardBackward mlp_forward_backward(const MlpParams& params, std::span<const double> input,
                                     std::span<const double> cotangent);

bool all_finite(std::span<const double> values);

}  // namespace trl
