#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "probplan/util/rng.hpp"

namespace probplan {

// Fully-connected perceptron: Linear -> ReLU -> ... -> Linear, no output
// activation. Parameters live in one flat vector (per layer: row-major
// weight matrix, then biases).
class DenseNet {
 public:
  DenseNet() = default;

  explicit DenseNet(std::vector<int> dims) : dims_(std::move(dims)) {
    offsets_.push_back(0);
    for (std::size_t l = 1; l < dims_.size(); ++l) {
      offsets_.push_back(offsets_.back() +
                         dims_[l - 1] * dims_[l] + dims_[l]);
    }
    params_.assign(offsets_.back(), 0.0);
  }

  const std::vector<int>& dims() const { return dims_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }

  // He-uniform weights, zero biases.
  void init(Rng& rng) {
    for (std::size_t l = 1; l < dims_.size(); ++l) {
      const int in = dims_[l - 1];
      const int out = dims_[l];
      const double limit = std::sqrt(6.0 / (in + out));
      double* w = params_.data() + offsets_[l - 1];
      for (int i = 0; i < in * out; ++i) w[i] = rng.uniform(-limit, limit);
      for (int i = 0; i < out; ++i) w[in * out + i] = 0.0;
    }
  }

  // Layer activations kept around for backprop. acts[0] is the input,
  // acts[l] the (post-ReLU) output of layer l.
  struct Trace {
    std::vector<std::vector<double>> acts;
  };

  std::vector<double> forward(std::span<const double> x, Trace* trace = nullptr) const {
    std::vector<double> a(x.begin(), x.end());
    if (trace) {
      trace->acts.clear();
      trace->acts.push_back(a);
    }
    for (std::size_t l = 1; l < dims_.size(); ++l) {
      const int in = dims_[l - 1];
      const int out = dims_[l];
      const double* w = params_.data() + offsets_[l - 1];
      const double* b = w + in * out;
      std::vector<double> z(out);
      for (int j = 0; j < out; ++j) {
        double acc = b[j];
        const double* row = w + j * in;
        for (int k = 0; k < in; ++k) acc += row[k] * a[k];
        z[j] = acc;
      }
      if (l + 1 < dims_.size()) {
        for (double& v : z) v = v > 0.0 ? v : 0.0;  // ReLU on hidden layers
      }
      a = std::move(z);
      if (trace) trace->acts.push_back(a);
    }
    return a;
  }

  // Accumulates dL/dparams into grad (same layout as params) and returns
  // dL/dinput. grad must be pre-sized to parameter_count().
  std::vector<double> backward(const Trace& trace, std::span<const double> dout,
                               std::span<double> grad) const {
    std::vector<double> delta(dout.begin(), dout.end());
    for (std::size_t l = dims_.size() - 1; l >= 1; --l) {
      const int in = dims_[l - 1];
      const int out = dims_[l];
      if (l + 1 < dims_.size()) {
        // ReLU: post-activation zero means the unit was clamped.
        for (int j = 0; j < out; ++j) {
          if (trace.acts[l][j] <= 0.0) delta[j] = 0.0;
        }
      }
      const double* w = params_.data() + offsets_[l - 1];
      double* gw = grad.data() + offsets_[l - 1];
      double* gb = gw + in * out;
      const std::vector<double>& prev = trace.acts[l - 1];
      std::vector<double> dprev(in, 0.0);
      for (int j = 0; j < out; ++j) {
        const double d = delta[j];
        if (d == 0.0) continue;
        gb[j] += d;
        double* grow = gw + j * in;
        const double* wrow = w + j * in;
        for (int k = 0; k < in; ++k) {
          grow[k] += d * prev[k];
          dprev[k] += d * wrow[k];
        }
      }
      delta = std::move(dprev);
    }
    return delta;
  }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;  // parameter offset of each layer
  std::vector<double> params_;
};

// Adam with bias correction, one state per parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically stable binary cross-entropy on a logit.
inline double bce_with_logits(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace probplan
