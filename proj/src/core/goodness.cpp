#include "core/goodness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/error.hpp"
#include "core/matrix.hpp"

namespace ff {

const char* algorithm_name(Algorithm a) {
  return a == Algorithm::Ffa ? "ffa" : "sffa";
}

const char* activation_name(Activation a) {
  return a == Activation::ReLU ? "relu" : "sigmoid";
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double sffa_goodness(double pos_sq, double neg_sq, double epsilon) {
  if (epsilon <= 0.0) {
    raise(Errc::invalid_argument, "sffa_goodness: epsilon must be positive");
  }
  return (pos_sq + epsilon) / (pos_sq + neg_sq + 2.0 * epsilon);
}

double sffa_goodness(const LatentPair& latent, double epsilon) {
  return sffa_goodness(sq_norm(latent.pos), sq_norm(latent.neg), epsilon);
}

double ffa_probability(std::span<const double> latent, double theta) {
  return logistic(sq_norm(latent) - theta);
}

void kwta_inplace(std::span<double> v, std::size_t k) {
  if (k == 0) raise(Errc::invalid_argument, "kwta: k must be >= 1");
  if (k >= v.size()) return;
  // Indices of the k largest values; ties keep the lowest index because the
  // comparator falls back to index order and the sort is over indices.
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (v[a] != v[b]) return v[a] > v[b];
                      return a < b;
                    });
  std::vector<bool> keep(v.size(), false);
  for (std::size_t i = 0; i < k; ++i) keep[order[i]] = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!keep[i]) v[i] = 0.0;
  }
}

std::vector<double> kwta(std::span<const double> v, std::size_t k) {
  std::vector<double> out(v.begin(), v.end());
  kwta_inplace(out, k);
  return out;
}

namespace {

constexpr double kLowActivityNorm = 1e-12;

bool scale_to_unit(std::span<double> v) {
  const double norm = std::sqrt(sq_norm(v));
  if (norm < kLowActivityNorm) return false;
  const double inv = 1.0 / norm;
  for (double& x : v) x *= inv;
  return true;
}

bool scale_by_squared(std::span<double> v) {
  const double nsq = sq_norm(v);
  if (std::sqrt(nsq) < kLowActivityNorm) return false;
  const double inv = 1.0 / nsq;
  for (double& x : v) x *= inv;
  return true;
}

}  // namespace

NormalizeResult normalize_latent_ffa(std::span<double> latent) {
  NormalizeResult res;
  res.low_activity = !scale_to_unit(latent);
  return res;
}

NormalizeResult normalize_latent_sffa(std::span<double> latent, std::size_t pos_count,
                                      bool divide_by_squared_norm) {
  if (pos_count == 0 || pos_count > latent.size()) {
    raise(Errc::invalid_argument, "normalize: pos_count " + std::to_string(pos_count) +
                                      " outside layer of " + std::to_string(latent.size()));
  }
  NormalizeResult res;
  auto pos = latent.subspan(0, pos_count);
  auto neg = latent.subspan(pos_count);
  if (divide_by_squared_norm) {
    res.low_activity = !scale_by_squared(pos);
    res.low_activity = !scale_by_squared(neg) || res.low_activity;
  } else {
    res.low_activity = !scale_to_unit(pos);
    res.low_activity = !scale_to_unit(neg) || res.low_activity;
  }
  return res;
}

double local_loss(double goodness_p, bool is_positive, double latent_l1,
                  const LossConfig& cfg) {
  if (!(cfg.clamp > 0.0 && cfg.clamp < 0.5)) {
    raise(Errc::invalid_argument, "local_loss: clamp must lie in (0, 0.5)");
  }
  const double p = std::clamp(goodness_p, cfg.clamp, 1.0 - cfg.clamp);
  const double bce = is_positive ? -std::log(p) : -std::log(1.0 - p);
  if (!cfg.regularize) return bce;
  return (1.0 + std::exp(-cfg.reg_alpha * latent_l1)) * bce;
}

}  // namespace ff
