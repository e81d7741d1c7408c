#pragma once

// Dense networks for the three players: forward/backward for a ReLU MLP,
// softmax cross-entropy and Adam. Everything is double precision.

#include <cstddef>
#include <span>
#include <vector>

namespace mcmh {

class Rng;

/// Row-major out x in matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Affine layers with ReLU between them and none after the last.
struct DenseParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }
  /// Direct tally of weights and biases.
  std::size_t parameter_count() const;
  bool same_shape(const DenseParams& other) const;

  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

enum class Arch { mlp, linear };

const char* arch_name(Arch arch);
Arch parse_arch(const char* name);

/// Hidden widths for input D: floor(D/2), floor(D/4), each clamped at 2.
std::vector<std::size_t> layer_widths(Arch arch, std::size_t input_dim, std::size_t output_dim);

/// Zero biases; weights uniform in +-sqrt(6/(fan_in+fan_out)) when `rng` is
/// given, zero otherwise.
DenseParams make_network(Arch arch, std::size_t input_dim, std::size_t output_dim, Rng* rng);
DenseParams zeros_like(const DenseParams& params);

struct ForwardCache {
  /// activations[0] is the input, activations[l+1] the output of layer l
  /// (after ReLU for hidden layers). The last entry holds the logits.
  std::vector<std::vector<double>> activations;

  std::span<const double> logits() const { return activations.back(); }
};

ForwardCache forward(const DenseParams& params, std::span<const double> input);

std::vector<double> softmax(std::span<const double> logits);

struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> dlogits;
};

/// -log softmax(logits)[label] with max subtraction; dlogits = p - onehot.
CrossEntropy cross_entropy(std::span<const double> logits, int label);

/// Gradient of a scalar loss given dloss/dlogits. ReLU'(0) is taken as 0.
DenseParams backward(const DenseParams& params, const ForwardCache& cache,
                     std::span<const double> dlogits);

/// into += scale * grads
void accumulate(DenseParams& into, const DenseParams& grads, double scale = 1.0);

struct AdamState {
  std::size_t step = 0;
  DenseParams first_moment;
  DenseParams second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const DenseParams& params, double lr = 1e-3);
};

/// One bias-corrected Adam update. Throws on shape mismatch.
void adam_step(DenseParams& params, const DenseParams& grads, AdamState& state);

/// Parameters (biases included) of `submodels` networks with a two-logit head.
std::size_t param_count(std::size_t input_dim, Arch arch, std::size_t submodels);
/// Generator counted as an MLP plus predictor and complement predictor of `arch`,
/// all with two-logit heads.
std::size_t game_param_count(std::size_t input_dim, Arch predictor_arch);

}  // namespace mcmh
