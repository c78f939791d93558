#include "derl/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace derl {

namespace {

double apply_act(Activation act, double z) {
  switch (act) {
    case Activation::identity: return z;
    case Activation::tanh_fn: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

double act_grad(Activation act, double z, double post) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::tanh_fn: return 1.0 - post * post;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

Network::Network(std::vector<int> sizes, Activation hidden_act,
                 int softmax_group, std::uint64_t seed)
    : sizes_(std::move(sizes)),
      hidden_act_(hidden_act),
      softmax_group_(softmax_group) {
  if (sizes_.size() < 2) throw Error("network: need at least two layer sizes");
  for (int n : sizes_) {
    if (n <= 0) throw Error("network: layer sizes must be positive");
  }
  if (softmax_group_ < 0 ||
      (softmax_group_ > 0 && sizes_.back() % softmax_group_ != 0)) {
    throw Error("network: softmax group must divide the output size");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
    b_off_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l + 1]);
  }
  params_.resize(total);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t count =
        static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    for (std::size_t k = 0; k < count; ++k) {
      params_[w_off_[l] + k] = rng.uniform(-bound, bound);
    }
  }
}

std::vector<double> Network::forward(std::span<const double> input) const {
  Cache cache;
  return forward(input, cache);
}

std::vector<double> Network::forward(std::span<const double> input,
                                     Cache& cache) const {
  if (static_cast<int>(input.size()) != sizes_.front()) {
    throw ShapeMismatchError("network forward: input size mismatch");
  }
  const std::size_t layers = sizes_.size() - 1;
  cache.input.assign(input.begin(), input.end());
  cache.pre.assign(layers, {});
  cache.post.assign(layers, {});

  const std::vector<double>* src = &cache.input;
  for (std::size_t l = 0; l < layers; ++l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    const Activation act =
        (l + 1 == layers) ? Activation::identity : hidden_act_;
    auto& z = cache.pre[l];
    auto& h = cache.post[l];
    z.resize(rows);
    h.resize(rows);
    const double* w = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    for (int i = 0; i < rows; ++i) {
      double acc = b[i];
      const double* wrow = w + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) acc += wrow[j] * (*src)[j];
      z[i] = acc;
      h[i] = apply_act(act, acc);
    }
    src = &h;
  }

  cache.output = cache.post.back();
  if (softmax_group_ > 0) {
    const int g = softmax_group_;
    for (std::size_t base = 0; base < cache.output.size();
         base += static_cast<std::size_t>(g)) {
      double zmax = cache.output[base];
      for (int k = 1; k < g; ++k) zmax = std::max(zmax, cache.output[base + k]);
      double norm = 0.0;
      for (int k = 0; k < g; ++k) {
        cache.output[base + k] = std::exp(cache.output[base + k] - zmax);
        norm += cache.output[base + k];
      }
      for (int k = 0; k < g; ++k) cache.output[base + k] /= norm;
    }
  }
  return cache.output;
}

std::vector<double> Network::backward(const Cache& cache,
                                      std::span<const double> output_grad) const {
  const std::size_t layers = sizes_.size() - 1;
  if (cache.pre.size() != layers ||
      static_cast<int>(cache.input.size()) != sizes_.front() ||
      static_cast<int>(output_grad.size()) != sizes_.back()) {
    throw CacheMismatchError("network backward: cache does not match network");
  }

  std::vector<double> grads(params_.size(), 0.0);
  std::vector<double> delta(output_grad.begin(), output_grad.end());

  if (softmax_group_ > 0) {
    // d loss / d logits for grouped softmax: s .* (g - <g, s>).
    const int g = softmax_group_;
    for (std::size_t base = 0; base < delta.size();
         base += static_cast<std::size_t>(g)) {
      double dot = 0.0;
      for (int k = 0; k < g; ++k) {
        dot += delta[base + k] * cache.output[base + k];
      }
      for (int k = 0; k < g; ++k) {
        delta[base + k] = cache.output[base + k] * (delta[base + k] - dot);
      }
    }
  }

  for (std::size_t l = layers; l-- > 0;) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    const Activation act =
        (l + 1 == layers) ? Activation::identity : hidden_act_;
    const std::vector<double>& below =
        (l == 0) ? cache.input : cache.post[l - 1];
    double* gw = grads.data() + w_off_[l];
    double* gb = grads.data() + b_off_[l];
    const double* w = params_.data() + w_off_[l];

    std::vector<double> next_delta(cols, 0.0);
    for (int i = 0; i < rows; ++i) {
      const double dz =
          delta[i] * act_grad(act, cache.pre[l][i], cache.post[l][i]);
      gb[i] += dz;
      double* gwrow = gw + static_cast<std::size_t>(i) * cols;
      const double* wrow = w + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) {
        gwrow[j] += dz * below[j];
        next_delta[j] += dz * wrow[j];
      }
    }
    delta = std::move(next_delta);
  }
  return grads;
}

std::string Network::save_text() const {
  std::string out = "net";
  char buf[40];
  for (int n : sizes_) {
    std::snprintf(buf, sizeof(buf), " %d", n);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), " act %d group %d\n",
                static_cast<int>(hidden_act_), softmax_group_);
  out += buf;
  for (double p : params_) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", p);
    out += buf;
  }
  return out;
}

Network Network::load_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("network record: empty input");
  std::istringstream h(line);
  std::string tag;
  h >> tag;
  if (tag != "net") throw IoError("network record: bad header");
  std::vector<int> sizes;
  std::string word;
  int act = 0, group = 0;
  while (h >> word) {
    if (word == "act") {
      h >> act >> word >> group;
      break;
    }
    sizes.push_back(std::stoi(word));
  }
  Network net(sizes, static_cast<Activation>(act), group, 0);
  for (double& p : net.params_) {
    if (!(in >> p)) throw IoError("network record: short parameter vector");
  }
  return net;
}

void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw ShapeMismatchError("adam_step: params/grads size mismatch");
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

double grad_check(Network& net, std::span<const double> input,
                  const LossSpec& loss, double h) {
  Network::Cache cache;
  const std::vector<double> out = net.forward(input, cache);
  const std::vector<double> analytic =
      net.backward(cache, loss.output_grad(out));

  auto loss_at_params = [&](const std::vector<double>&) {
    return loss.value(net.forward(input));
  };
  return grad_check_params(net.params(), loss_at_params, analytic, h);
}

double grad_check_params(
    std::vector<double>& params,
    const std::function<double(const std::vector<double>&)>& loss_value,
    std::span<const double> analytic, double h) {
  if (analytic.size() != params.size()) {
    throw ShapeMismatchError("grad_check: gradient size mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = loss_value(params);
    params[i] = keep - h;
    const double down = loss_value(params);
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom =
        std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace derl
