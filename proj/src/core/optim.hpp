#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ff {

// Per-parameter Adam moments. One state per parameter block (a weight matrix
// or a bias vector); `t` advances once per apply.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  void resize(std::size_t n);
};

// Bias-corrected Adam step: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_apply(AdamState& state, std::span<double> params,
                std::span<const double> grads, double lr);

// Plain SGD step: params -= lr * grads.
void sgd_apply(std::span<double> params, std::span<const double> grads, double lr);

}  // namespace ff
