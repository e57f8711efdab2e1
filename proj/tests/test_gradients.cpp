#include <cmath>

#include "core/error.hpp"
#include "core/network.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace ff;

namespace {

FFLayer random_layer(std::size_t in_dim, std::size_t width, Activation act,
                     std::size_t pos_count, std::size_t kwta_k, Rng& rng,
                     double weight_scale = 0.6) {
  FFLayer layer;
  layer.weights = Matrix(in_dim, width);
  for (double& w : layer.weights.data()) w = rng.normal() * weight_scale;
  layer.bias.resize(width);
  for (double& b : layer.bias) b = rng.normal() * 0.1;
  layer.activation = act;
  layer.pos_count = pos_count;
  layer.kwta_k = kwta_k;
  return layer;
}

// Central finite differences of layer_local_loss over every weight and bias.
LayerGrad finite_difference(FFLayer layer, const NetworkConfig& cfg,
                            const std::vector<double>& input, bool positive,
                            double h = 1e-5) {
  LayerGrad fd;
  fd.dw = Matrix(layer.in_dim(), layer.width());
  fd.db.assign(layer.width(), 0.0);
  for (std::size_t i = 0; i < layer.in_dim(); ++i) {
    for (std::size_t j = 0; j < layer.width(); ++j) {
      const double saved = layer.weights(i, j);
      layer.weights(i, j) = saved + h;
      const double up = layer_local_loss(layer, cfg, input, positive);
      layer.weights(i, j) = saved - h;
      const double down = layer_local_loss(layer, cfg, input, positive);
      layer.weights(i, j) = saved;
      fd.dw(i, j) = (up - down) / (2.0 * h);
    }
  }
  for (std::size_t j = 0; j < layer.width(); ++j) {
    const double saved = layer.bias[j];
    layer.bias[j] = saved + h;
    const double up = layer_local_loss(layer, cfg, input, positive);
    layer.bias[j] = saved - h;
    const double down = layer_local_loss(layer, cfg, input, positive);
    layer.bias[j] = saved;
    fd.db[j] = (up - down) / (2.0 * h);
  }
  return fd;
}

double max_abs(const LayerGrad& g) {
  double mx = 0.0;
  for (double v : g.dw.data()) mx = std::max(mx, std::fabs(v));
  for (double v : g.db) mx = std::max(mx, std::fabs(v));
  return mx;
}

void check_match(const LayerGrad& analytic, const LayerGrad& fd, double tol) {
  const double scale = std::max({max_abs(analytic), max_abs(fd), 1e-12});
  auto entry_ok = [&](double a, double b) {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-6 * scale});
    return std::fabs(a - b) / denom < tol;
  };
  for (std::size_t i = 0; i < analytic.dw.size(); ++i) {
    CHECK(entry_ok(analytic.dw.data()[i], fd.dw.data()[i]));
  }
  for (std::size_t j = 0; j < analytic.db.size(); ++j) {
    CHECK(entry_ok(analytic.db[j], fd.db[j]));
  }
}

// The finite-difference probes need a differentiable neighborhood: the k-WTA
// winner set must not flip under the probe, and the probability must sit
// inside the clamp interval (the analytic gradient pins the cross-entropy
// factor at the clamp bound outside it, on purpose).
bool state_ok(const FFLayer& layer, const NetworkConfig& cfg,
              const std::vector<double>& input) {
  std::vector<double> act(layer.width());
  for (std::size_t j = 0; j < layer.width(); ++j) {
    double a = layer.bias[j];
    for (std::size_t i = 0; i < input.size(); ++i) a += input[i] * layer.weights(i, j);
    act[j] = layer.activation == Activation::ReLU ? std::max(a, 0.0) : logistic(a);
  }
  if (layer.kwta_k > 0 && layer.kwta_k < layer.width()) {
    std::vector<double> sorted = act;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    if (sorted[layer.kwta_k - 1] - sorted[layer.kwta_k] <= 1e-3) return false;
    act = kwta(act, layer.kwta_k);
  }
  double pos_sq = 0.0, neg_sq = 0.0;
  for (std::size_t j = 0; j < layer.width(); ++j) {
    (j < layer.pos_count ? pos_sq : neg_sq) += act[j] * act[j];
  }
  const double p = cfg.algorithm == Algorithm::Sffa
                       ? sffa_goodness(pos_sq, neg_sq, cfg.epsilon)
                       : logistic(pos_sq + neg_sq - cfg.theta);
  return p > 4.0 * cfg.clamp && p < 1.0 - 4.0 * cfg.clamp;
}

}  // namespace

TEST_CASE("layer gradients match central finite differences everywhere") {
  Rng rng(101);
  std::size_t checked = 0;
  for (Algorithm algorithm : {Algorithm::Sffa, Algorithm::Ffa}) {
    for (Activation act : {Activation::ReLU, Activation::Sigmoid}) {
      for (bool positive : {true, false}) {
        for (int variant = 0; variant < 4; ++variant) {
          NetworkConfig cfg;
          cfg.algorithm = algorithm;
          cfg.regularize = variant % 2 == 0;
          const std::size_t kwta_k = variant >= 2 ? 3 : 0;
          const std::size_t width = 8;
          const std::size_t pos = algorithm == Algorithm::Sffa ? 4 : 8;
          const double scale = algorithm == Algorithm::Ffa ? 0.25 : 0.6;
          for (int rep = 0; rep < 4; ++rep) {
            FFLayer layer = random_layer(6, width, act, pos, kwta_k, rng, scale);
            std::vector<double> input = rng.normal_vec(6);
            int guard = 0;
            while (!state_ok(layer, cfg, input) && guard++ < 200) {
              layer = random_layer(6, width, act, pos, kwta_k, rng, scale);
              input = rng.normal_vec(6);
            }
            REQUIRE(guard < 200);
            const LayerGrad analytic = layer_gradient(layer, cfg, input, positive);
            const LayerGrad fd = finite_difference(layer, cfg, input, positive);
            check_match(analytic, fd, 1e-4);
            ++checked;
          }
        }
      }
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("positive-sample gradient reduces to the -R*S and +S forms") {
  // Bias-free ReLU layer, bare ratio loss (no regularizer, epsilon ~ 0),
  // all pre-activations positive.
  Rng rng(103);
  NetworkConfig cfg;
  cfg.algorithm = Algorithm::Sffa;
  cfg.regularize = false;
  cfg.epsilon = 1e-15;
  cfg.clamp = 1e-12;

  FFLayer layer;
  const std::size_t in_dim = 5, width = 6;
  layer.weights = Matrix(in_dim, width);
  for (double& w : layer.weights.data()) w = 0.2 + 0.5 * rng.uniform();
  layer.bias.assign(width, 0.0);
  layer.activation = Activation::ReLU;
  layer.pos_count = 3;
  layer.kwta_k = 0;

  std::vector<double> input(in_dim);
  for (double& v : input) v = 0.1 + rng.uniform();

  // Forward by hand.
  std::vector<double> latent(width);
  for (std::size_t j = 0; j < width; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < in_dim; ++i) a += input[i] * layer.weights(i, j);
    latent[j] = std::max(a, 0.0);
    REQUIRE(latent[j] > 0.0);
  }
  double e = 0.0, i_act = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    (j < layer.pos_count ? e : i_act) += latent[j] * latent[j];
  }
  const double ratio = i_act / e;
  const double inv_sum = 1.0 / (e + i_act);

  const LayerGrad grad = layer_gradient(layer, cfg, input, true);
  for (std::size_t j = 0; j < width; ++j) {
    // f'(A_j) = 1 on the active ReLU branch.
    const double base = 2.0 * latent[j];
    const double expected_coef =
        j < layer.pos_count ? -ratio * inv_sum * base : inv_sum * base;
    for (std::size_t i = 0; i < in_dim; ++i) {
      CHECK(grad.dw(i, j) ==
            doctest::Approx(expected_coef * input[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("negative-set gradient differs from the positive set by -R") {
  // Duplicate one weight column across the two sets: the activations match,
  // so the gradients must differ exactly by the -R scaling.
  Rng rng(107);
  NetworkConfig cfg;
  cfg.algorithm = Algorithm::Sffa;
  cfg.regularize = false;
  cfg.epsilon = 1e-15;

  FFLayer layer;
  const std::size_t in_dim = 4, width = 4;
  layer.weights = Matrix(in_dim, width);
  for (double& w : layer.weights.data()) w = 0.3 + 0.4 * rng.uniform();
  for (std::size_t i = 0; i < in_dim; ++i) layer.weights(i, 2) = layer.weights(i, 0);
  layer.bias.assign(width, 0.0);
  layer.activation = Activation::ReLU;
  layer.pos_count = 2;
  layer.kwta_k = 0;

  std::vector<double> input(in_dim, 0.5);
  std::vector<double> latent(width);
  double e = 0.0, i_act = 0.0;
  for (std::size_t j = 0; j < width; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < in_dim; ++i) a += input[i] * layer.weights(i, j);
    latent[j] = std::max(a, 0.0);
    (j < 2 ? e : i_act) += latent[j] * latent[j];
  }
  const double ratio = i_act / e;

  const LayerGrad grad = layer_gradient(layer, cfg, input, true);
  for (std::size_t i = 0; i < in_dim; ++i) {
    CHECK(grad.dw(i, 0) == doctest::Approx(-ratio * grad.dw(i, 2)).epsilon(1e-9));
  }
}

TEST_CASE("zero input gives a zero weight gradient") {
  Rng rng(109);
  NetworkConfig cfg;
  cfg.algorithm = Algorithm::Sffa;
  FFLayer layer = random_layer(5, 6, Activation::Sigmoid, 3, 0, rng);
  const std::vector<double> input(5, 0.0);
  const LayerGrad grad = layer_gradient(layer, cfg, input, true);
  for (double v : grad.dw.data()) CHECK(v == 0.0);
}

TEST_CASE("zero-activity positive set still yields a finite clamped gradient") {
  NetworkConfig cfg;
  cfg.algorithm = Algorithm::Sffa;
  FFLayer layer;
  layer.weights = Matrix(3, 4);
  // Positive-set weights drive the activations negative: ReLU silences them.
  for (std::size_t i = 0; i < 3; ++i) {
    layer.weights(i, 0) = -1.0;
    layer.weights(i, 1) = -1.0;
    layer.weights(i, 2) = 0.5;
    layer.weights(i, 3) = 0.7;
  }
  layer.bias.assign(4, 0.0);
  layer.activation = Activation::ReLU;
  layer.pos_count = 2;
  layer.kwta_k = 0;
  const std::vector<double> input{0.4, 0.3, 0.2};
  const LayerGrad grad = layer_gradient(layer, cfg, input, true);
  for (double v : grad.dw.data()) CHECK(std::isfinite(v));
  const double loss = layer_local_loss(layer, cfg, input, true);
  CHECK(std::isfinite(loss));
  // The probability is pinned at the clamp, so the loss caps at the clamped
  // BCE times the activity multiplier.
  CHECK(loss <= (1.0 + 1.0) * -std::log(cfg.clamp) + 1e-9);
}

TEST_CASE("single-step activity update follows the closed-form scalings") {
  Rng rng(113);
  std::size_t checked = 0;
  while (checked < 100) {
    FFLayer layer = random_layer(6, 8, Activation::ReLU, 4, 0, rng, 0.8);
    layer.bias.assign(8, 0.0);
    std::vector<double> input = rng.normal_vec(6);
    const double norm = std::sqrt(sq_norm(input));
    for (double& v : input) v /= norm;

    // Current activities decide a stable lr.
    std::vector<double> latent(8);
    double e = 0.0, i_act = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      double a = 0.0;
      for (std::size_t i = 0; i < 6; ++i) a += input[i] * layer.weights(i, j);
      latent[j] = std::max(a, 0.0);
      (j < 4 ? e : i_act) += latent[j] * latent[j];
    }
    if (e < 0.05 || i_act < 0.05) continue;
    const double inv_sum = 1.0 / (e + i_act);
    const double lr = (0.05 + 0.6 * rng.uniform()) / (2.0 * inv_sum);
    if (2.0 * lr * inv_sum >= 1.0) continue;

    const double ratio = i_act / e;
    const LatentPair updated = sgd_single_step_activity(layer, input, lr);
    const double e_new = sq_norm(updated.pos);
    const double i_new = sq_norm(updated.neg);
    const double e_scale = 1.0 + 2.0 * lr * ratio * inv_sum;
    const double i_scale = 1.0 - 2.0 * lr * inv_sum;
    CHECK(e_new == doctest::Approx(e_scale * e_scale * e).epsilon(1e-10));
    CHECK(i_new == doctest::Approx(i_scale * i_scale * i_act).epsilon(1e-10));

    // Goodness and total activity strictly increase.
    CHECK(e_new / (e_new + i_new) > e / (e + i_act));
    CHECK(e_new + i_new > e + i_act);

    // Empirical phase-plane slope vs the closed-form tangent.
    const double slope_emp = (i_new - i_act) / (e_new - e);
    const double slope_closed =
        -(1.0 - lr * inv_sum) / (1.0 + lr * ratio * inv_sum);
    CHECK(std::fabs(slope_emp - slope_closed) / std::fabs(slope_closed) < 1e-9);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("single-step activity update: zero lr leaves latents unchanged") {
  Rng rng(127);
  for (int rep = 0; rep < 10; ++rep) {
    FFLayer layer = random_layer(6, 8, Activation::ReLU, 4, 0, rng, 0.8);
    layer.bias.assign(8, 0.0);
    std::vector<double> input = rng.normal_vec(6);
    const double norm = std::sqrt(sq_norm(input));
    for (double& v : input) v /= norm;
    std::vector<double> before(8);
    double e = 0.0, i_act = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      double a = 0.0;
      for (std::size_t i = 0; i < 6; ++i) a += input[i] * layer.weights(i, j);
      before[j] = std::max(a, 0.0);
      (j < 4 ? e : i_act) += before[j] * before[j];
    }
    if (e <= 0.0 || i_act <= 0.0) continue;
    const LatentPair updated = sgd_single_step_activity(layer, input, 0.0);
    for (std::size_t j = 0; j < 4; ++j) CHECK(updated.pos[j] == before[j]);
    for (std::size_t j = 0; j < 4; ++j) CHECK(updated.neg[j] == before[4 + j]);
  }
}

TEST_CASE("single-step activity update refuses unstable learning rates") {
  Rng rng(131);
  FFLayer layer = random_layer(6, 8, Activation::ReLU, 4, 0, rng, 0.8);
  layer.bias.assign(8, 0.0);
  std::vector<double> input = rng.normal_vec(6);
  const double norm = std::sqrt(sq_norm(input));
  for (double& v : input) v /= norm;
  std::vector<double> latent(8);
  double e = 0.0, i_act = 0.0;
  for (std::size_t j = 0; j < 8; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < 6; ++i) a += input[i] * layer.weights(i, j);
    latent[j] = std::max(a, 0.0);
    (j < 4 ? e : i_act) += latent[j] * latent[j];
  }
  REQUIRE(e + i_act > 0.0);
  const double lr = 0.75 * (e + i_act);  // 2*lr*S = 1.5
  try {
    sgd_single_step_activity(layer, input, lr);
    FAIL("expected stability refusal");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::unstable_step);
  }
}
