#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "derl/errors.hpp"
#include "derl/rng.hpp"

namespace derl {

enum class Activation { identity, tanh_fn, relu };

/// Fixed-topology multi-layer perceptron over a flat parameter vector, with
/// an optional terminal softmax applied over contiguous output groups (one
/// group of atom probabilities per action for categorical heads).
///
/// Parameters initialize uniformly in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
/// seeded. Forward passes are bit-deterministic given parameters and input.
class Network {
 public:
  /// `sizes` = {in, hidden..., out}; `hidden_act` applies to all layers but
  /// the last (identity); `softmax_group` > 0 splits the output into groups
  /// of that size, each softmax-normalized.
  Network(std::vector<int> sizes, Activation hidden_act, int softmax_group,
          std::uint64_t seed);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int softmax_group() const { return softmax_group_; }
  std::size_t n_params() const { return params_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  struct Cache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // z_l per layer
    std::vector<std::vector<double>> post;  // act(z_l) per layer
    std::vector<double> output;             // after softmax groups, if any
  };

  std::vector<double> forward(std::span<const double> input) const;
  std::vector<double> forward(std::span<const double> input, Cache& cache) const;

  /// Exact reverse-mode gradient of a scalar loss with the given
  /// d(loss)/d(output), for the forward pass recorded in `cache`.
  /// Returns the flat parameter gradient.
  std::vector<double> backward(const Cache& cache,
                               std::span<const double> output_grad) const;

  /// Flat text serialization with a shape header; round-trips bit-exactly.
  std::string save_text() const;
  static Network load_text(const std::string& text);

 private:
  std::vector<int> sizes_;
  Activation hidden_act_;
  int softmax_group_ = 0;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_, b_off_;
};

struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// Bias-corrected Adam update, in place. Lazily sizes the moment buffers.
void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state);

/// A differentiable scalar loss on a network output: its value and its
/// gradient with respect to the output vector.
struct LossSpec {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> output_grad;
};

/// Max over parameters of |analytic - numeric| / max(1e-8, |a| + |n|):
/// analytic from backward(), numeric from central differences at step h.
double grad_check(Network& net, std::span<const double> input,
                  const LossSpec& loss, double h = 1e-5);

/// Same reduction for an arbitrary parameter-space loss whose analytic
/// gradient the caller already has (batch losses, multi-pass objectives).
double grad_check_params(
    std::vector<double>& params,
    const std::function<double(const std::vector<double>&)>& loss_value,
    std::span<const double> analytic, double h = 1e-5);

}  // namespace derl
