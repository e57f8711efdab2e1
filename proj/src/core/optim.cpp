#include "core/optim.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace ff {

void AdamState::resize(std::size_t n) {
  m.resize(n, 0.0);
  v.resize(n, 0.0);
}

void adam_apply(AdamState& state, std::span<double> params,
                std::span<const double> grads, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    raise(Errc::dimension_mismatch,
          "adam_apply: params " + std::to_string(params.size()) + ", grads " +
              std::to_string(grads.size()) + ", state " + std::to_string(state.m.size()));
  }
  state.t += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double m_hat = state.m[i] / corr1;
    const double v_hat = state.v[i] / corr2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void sgd_apply(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) {
    raise(Errc::dimension_mismatch, "sgd_apply: params " + std::to_string(params.size()) +
                                        " vs grads " + std::to_string(grads.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

}  // namespace ff
