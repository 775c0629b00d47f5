#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "comtraq/random.hpp"

namespace comtraq {

// Fully connected network: ReLU on hidden layers, linear output.
// Parameters live in one flat buffer, layer by layer: W (out x in, row-major)
// followed by b (out).
class QNetwork {
 public:
  QNetwork() = default;

  explicit QNetwork(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("qnetwork: need at least input and output layers");
    for (auto s : sizes_)
      if (s == 0) throw std::invalid_argument("qnetwork: layer sizes must be positive");
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      w_off_.push_back(off);
      off += sizes_[l] * sizes_[l + 1];
      b_off_.push_back(off);
      off += sizes_[l + 1];
    }
    params_.assign(off, 0.0);
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(RandomStream& rng) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) params_[w_off_[l] + i] = rng.uniform(-bound, bound);
      for (std::size_t i = 0; i < sizes_[l + 1]; ++i) params_[b_off_[l] + i] = rng.uniform(-bound, bound);
    }
  }

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<double> weights(std::size_t l) { return {params_.data() + w_off_[l], sizes_[l] * sizes_[l + 1]}; }
  std::span<const double> weights(std::size_t l) const {
    return {params_.data() + w_off_[l], sizes_[l] * sizes_[l + 1]};
  }
  std::span<double> bias(std::size_t l) { return {params_.data() + b_off_[l], sizes_[l + 1]}; }
  std::span<const double> bias(std::size_t l) const { return {params_.data() + b_off_[l], sizes_[l + 1]}; }

  std::vector<double> forward(std::span<const double> in) const {
    if (in.size() != input_size())
      throw std::invalid_argument("qnetwork: input has " + std::to_string(in.size()) + " features, expected " +
                                  std::to_string(input_size()));
    std::vector<double> cur(in.begin(), in.end()), next;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      affine(l, cur, next);
      if (l + 1 < num_layers())
        for (auto& v : next) v = std::max(v, 0.0);
      cur.swap(next);
    }
    return cur;
  }

  /// Mean over the batch of (Q(s_i)[a_i] - y_i)^2 and its gradient w.r.t.
  /// every parameter. `grad` is resized and overwritten.
  double mse_loss_and_grad(std::span<const std::vector<double>> inputs, std::span<const int> actions,
                           std::span<const double> targets, std::vector<double>& grad) const {
    const std::size_t n = inputs.size();
    if (n == 0 || actions.size() != n || targets.size() != n)
      throw std::invalid_argument("qnetwork: batch components must be non-empty and equal length");
    grad.assign(params_.size(), 0.0);
    const std::size_t L = num_layers();
    std::vector<std::vector<double>> acts(L + 1);
    std::vector<double> delta, prev_delta;
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) {
      if (inputs[i].size() != input_size()) throw std::invalid_argument("qnetwork: input size mismatch in batch");
      const int a = actions[i];
      if (a < 0 || static_cast<std::size_t>(a) >= output_size())
        throw std::invalid_argument("qnetwork: action index out of range");
      acts[0] = inputs[i];
      for (std::size_t l = 0; l < L; ++l) {
        affine(l, acts[l], acts[l + 1]);
        if (l + 1 < L)
          for (auto& v : acts[l + 1]) v = std::max(v, 0.0);
      }
      const double err = acts[L][static_cast<std::size_t>(a)] - targets[i];
      loss += err * err * scale;

      delta.assign(output_size(), 0.0);
      delta[static_cast<std::size_t>(a)] = 2.0 * err * scale;
      for (std::size_t l = L; l-- > 0;) {
        const std::size_t in_n = sizes_[l], out_n = sizes_[l + 1];
        double* gw = grad.data() + w_off_[l];
        double* gb = grad.data() + b_off_[l];
        const auto& x = acts[l];
        for (std::size_t o = 0; o < out_n; ++o) {
          const double d = delta[o];
          if (d == 0.0) continue;
          gb[o] += d;
          double* row = gw + o * in_n;
          for (std::size_t k = 0; k < in_n; ++k) row[k] += d * x[k];
        }
        if (l == 0) break;
        prev_delta.assign(in_n, 0.0);
        const double* w = params_.data() + w_off_[l];
        for (std::size_t o = 0; o < out_n; ++o) {
          const double d = delta[o];
          if (d == 0.0) continue;
          const double* row = w + o * in_n;
          for (std::size_t k = 0; k < in_n; ++k) prev_delta[k] += d * row[k];
        }
        // ReLU derivative; the kink at 0 takes the zero branch.
        for (std::size_t k = 0; k < in_n; ++k)
          if (!(x[k] > 0.0)) prev_delta[k] = 0.0;
        delta.swap(prev_delta);
      }
    }
    return loss;
  }

  friend bool operator==(const QNetwork&, const QNetwork&) = default;

 private:
  void affine(std::size_t l, const std::vector<double>& x, std::vector<double>& y) const {
    const std::size_t in_n = sizes_[l], out_n = sizes_[l + 1];
    const double* w = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    y.resize(out_n);
    for (std::size_t o = 0; o < out_n; ++o) {
      const double* row = w + o * in_n;
      double acc = b[o];
      for (std::size_t k = 0; k < in_n; ++k) acc += row[k] * x[k];
      y[o] = acc;
    }
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> w_off_, b_off_;
  std::vector<double> params_;
};

// Adam with bias correction.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<double> m, v;

  void step(std::span<double> params, std::span<const double> grad) {
    if (m.size() != params.size()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

}  // namespace comtraq
