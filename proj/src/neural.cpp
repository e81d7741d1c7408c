#include "mcmh/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "mcmh/random.hpp"

namespace mcmh {
namespace {

constexpr std::size_t kMinHidden = 2;

void require_same_shape(const DenseParams& a, const DenseParams& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

std::size_t layer_count(std::size_t in, std::size_t out) { return in * out + out; }

}  // namespace

std::size_t DenseParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.values.size() + layer.bias.size();
  return n;
}

bool DenseParams::same_shape(const DenseParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = other.layers[l];
    if (a.weight.rows != b.weight.rows || a.weight.cols != b.weight.cols ||
        a.bias.size() != b.bias.size()) {
      return false;
    }
  }
  return true;
}

const char* arch_name(Arch arch) { return arch == Arch::mlp ? "mlp" : "linear"; }

Arch parse_arch(const char* name) {
  if (std::strcmp(name, "mlp") == 0) return Arch::mlp;
  if (std::strcmp(name, "linear") == 0) return Arch::linear;
  throw std::invalid_argument(std::string("unknown architecture '") + name + "'");
}

std::vector<std::size_t> layer_widths(Arch arch, std::size_t input_dim, std::size_t output_dim) {
  if (arch == Arch::linear) return {input_dim, output_dim};
  return {input_dim, std::max(input_dim / 2, kMinHidden), std::max(input_dim / 4, kMinHidden),
          output_dim};
}

DenseParams make_network(Arch arch, std::size_t input_dim, std::size_t output_dim, Rng* rng) {
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("make_network: dimensions must be positive");
  }
  const auto widths = layer_widths(arch, input_dim, output_dim);
  DenseParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer{Matrix(widths[l + 1], widths[l]), std::vector<double>(widths[l + 1], 0.0)};
    if (rng != nullptr) {
      const double limit = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
      for (auto& w : layer.weight.values) w = rng->uniform(-limit, limit);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

DenseParams zeros_like(const DenseParams& params) {
  DenseParams out = params;
  for (auto& layer : out.layers) {
    std::fill(layer.weight.values.begin(), layer.weight.values.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  return out;
}

ForwardCache forward(const DenseParams& params, std::span<const double> input) {
  if (params.layers.empty() || input.size() != params.input_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(input.size()) +
                                " values, network expects " + std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.activations.reserve(params.layers.size() + 1);
  cache.activations.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const auto& x = cache.activations.back();
    std::vector<double> y(layer.bias);
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
      const double* row = &layer.weight.values[r * layer.weight.cols];
      double acc = 0.0;
      for (std::size_t c = 0; c < layer.weight.cols; ++c) acc += row[c] * x[c];
      y[r] += acc;
    }
    if (l + 1 < params.layers.size()) {
      for (auto& v : y) v = std::max(v, 0.0);
    }
    cache.activations.push_back(std::move(y));
  }
  return cache;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - peak);
    total += p[k];
  }
  for (auto& v : p) v /= total;
  return p;
}

CrossEntropy cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("cross_entropy: label out of range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (const double z : logits) total += std::exp(z - peak);
  const double log_norm = peak + std::log(total);
  CrossEntropy out;
  out.loss = log_norm - logits[static_cast<std::size_t>(label)];
  out.dlogits.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.dlogits[k] = std::exp(logits[k] - log_norm);
  out.dlogits[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

DenseParams backward(const DenseParams& params, const ForwardCache& cache,
                     std::span<const double> dlogits) {
  if (cache.activations.size() != params.layers.size() + 1 ||
      dlogits.size() != params.output_dim()) {
    throw std::invalid_argument("backward: cache or gradient does not match the network");
  }
  DenseParams grads = zeros_like(params);
  std::vector<double> delta(dlogits.begin(), dlogits.end());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    auto& g = grads.layers[l];
    const auto& x = cache.activations[l];
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
      g.bias[r] = delta[r];
      if (delta[r] == 0.0) continue;
      double* row = &g.weight.values[r * layer.weight.cols];
      for (std::size_t c = 0; c < layer.weight.cols; ++c) row[c] = delta[r] * x[c];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.weight.cols, 0.0);
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
      if (delta[r] == 0.0) continue;
      const double* row = &layer.weight.values[r * layer.weight.cols];
      for (std::size_t c = 0; c < layer.weight.cols; ++c) prev[c] += row[c] * delta[r];
    }
    // x is the post-ReLU output of layer l-1; x > 0 exactly where the unit was active.
    for (std::size_t c = 0; c < prev.size(); ++c) {
      if (!(x[c] > 0.0)) prev[c] = 0.0;
    }
    delta = std::move(prev);
  }
  return grads;
}

void accumulate(DenseParams& into, const DenseParams& grads, double scale) {
  require_same_shape(into, grads, "accumulate");
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    auto& dst = into.layers[l];
    const auto& src = grads.layers[l];
    for (std::size_t i = 0; i < dst.weight.values.size(); ++i) {
      dst.weight.values[i] += scale * src.weight.values[i];
    }
    for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += scale * src.bias[i];
  }
}

AdamState AdamState::for_params(const DenseParams& params, double lr) {
  AdamState state;
  state.first_moment = zeros_like(params);
  state.second_moment = zeros_like(params);
  state.lr = lr;
  return state;
}

void adam_step(DenseParams& params, const DenseParams& grads, AdamState& state) {
  require_same_shape(params, grads, "adam_step");
  require_same_shape(params, state.first_moment, "adam_step");
  require_same_shape(params, state.second_moment, "adam_step");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight.values, grads.layers[l].weight.values,
           state.first_moment.layers[l].weight.values,
           state.second_moment.layers[l].weight.values);
    update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

std::size_t param_count(std::size_t input_dim, Arch arch, std::size_t submodels) {
  const auto widths = layer_widths(arch, input_dim, 2);
  std::size_t per_model = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    per_model += layer_count(widths[l], widths[l + 1]);
  }
  return per_model * submodels;
}

std::size_t game_param_count(std::size_t input_dim, Arch predictor_arch) {
  return param_count(input_dim, Arch::mlp, 1) + param_count(input_dim, predictor_arch, 2);
}

}  // namespace mcmh
