// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Dataset-backed criteria read MNIST-family IDX
// files from $FFLEARN_DATA_DIR (default "data"), expecting mnist/ and fmnist/
// subdirectories with the standard file names. Heavy criteria train
// desk-scale models (2x500, 15 epochs static; 5-task streams, 2 epochs per
// task); expect roughly two hours of wall clock in total.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/baseline.hpp"
#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/continual.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/network.hpp"

using namespace ff;

namespace {

int g_failures = 0;
std::string g_data_dir;
std::string g_out_root;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

bool data_available(const std::string& dataset) {
  namespace fs = std::filesystem;
  const std::string dir = g_data_dir + "/" + dataset;
  for (const char* base : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                           "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"}) {
    if (!fs::exists(dir + "/" + base) && !fs::exists(dir + "/" + base + ".gz")) {
      return false;
    }
  }
  return true;
}

ExperimentConfig desk_train_config(const std::string& algorithm, const std::string& dataset,
                                   std::uint64_t seed, const std::string& out) {
  ExperimentConfig cfg(Command::Train);
  cfg.set("data_dir", g_data_dir);
  cfg.set("dataset", dataset);
  cfg.set("algorithm", algorithm);
  cfg.set("width", "500");
  cfg.set("hidden_layers", "2");
  cfg.set("epochs", "15");
  cfg.set("lr", "0.0001");
  cfg.set("batch", "512");
  cfg.set("seed", std::to_string(seed));
  cfg.set("out", out);
  return cfg;
}

ExperimentConfig desk_cl_config(const std::string& scenario, const std::string& strategy,
                                const std::string& out) {
  ExperimentConfig cfg(Command::Cl);
  cfg.set("data_dir", g_data_dir);
  cfg.set("dataset", "mnist");
  cfg.set("algorithm", "sffa");
  cfg.set("width", "500");
  cfg.set("hidden_layers", "2");
  cfg.set("scenario", scenario);
  cfg.set("strategy", strategy);
  cfg.set("runs", "3");
  cfg.set("seed", "1");
  cfg.set("out", out);
  return cfg;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

double minutes_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
         60.0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path + ">";
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Criterion 4: goodness symmetry.

void criterion_symmetry() {
  Rng rng(9001);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double e = rng.uniform() * 10.0;
    const double i = rng.uniform() * 10.0;
    worst = std::max(worst, std::fabs(sffa_goodness(e, i, 1e-8) +
                                      sffa_goodness(i, e, 1e-8) - 1.0));
  }
  report(4, worst < 1e-12,
         "p(E,I) + p(I,E) = 1 on 1000 fuzzed pairs (worst residual " +
             std::to_string(worst) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 5: analytic gradients vs central finite differences.

FFLayer random_layer(std::size_t in_dim, std::size_t width, Activation act,
                     std::size_t pos_count, std::size_t kwta_k, Rng& rng, double scale) {
  FFLayer layer;
  layer.weights = Matrix(in_dim, width);
  for (double& w : layer.weights.data()) w = rng.normal() * scale;
  layer.bias.resize(width);
  for (double& b : layer.bias) b = rng.normal() * 0.1;
  layer.activation = act;
  layer.pos_count = pos_count;
  layer.kwta_k = kwta_k;
  return layer;
}

bool ff_state_ok(const FFLayer& layer, const NetworkConfig& cfg,
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

void criterion_gradient_oracle() {
  Rng rng(9005);
  const double h = 1e-5;
  std::size_t checked = 0;
  std::size_t configs = 0;
  double worst = 0.0;
  for (Algorithm algorithm : {Algorithm::Sffa, Algorithm::Ffa}) {
    for (Activation act : {Activation::ReLU, Activation::Sigmoid}) {
      for (bool positive : {true, false}) {
        for (int rep = 0; rep < 4; ++rep) {
          NetworkConfig cfg;
          cfg.algorithm = algorithm;
          const std::size_t width = 8;
          const std::size_t pos = algorithm == Algorithm::Sffa ? 4 : 8;
          const double scale = algorithm == Algorithm::Ffa ? 0.25 : 0.6;
          FFLayer layer = random_layer(6, width, act, pos, rep % 2 ? 3 : 0, rng, scale);
          std::vector<double> input = rng.normal_vec(6);
          int guard = 0;
          while (!ff_state_ok(layer, cfg, input) && guard++ < 200) {
            layer = random_layer(6, width, act, pos, rep % 2 ? 3 : 0, rng, scale);
            input = rng.normal_vec(6);
          }
          const LayerGrad analytic = layer_gradient(layer, cfg, input, positive);
          double max_grad = 0.0;
          for (double v : analytic.dw.data()) max_grad = std::max(max_grad, std::fabs(v));
          for (std::size_t i = 0; i < layer.in_dim(); ++i) {
            for (std::size_t j = 0; j < layer.width(); ++j) {
              const double saved = layer.weights(i, j);
              layer.weights(i, j) = saved + h;
              const double up = layer_local_loss(layer, cfg, input, positive);
              layer.weights(i, j) = saved - h;
              const double down = layer_local_loss(layer, cfg, input, positive);
              layer.weights(i, j) = saved;
              const double fd = (up - down) / (2.0 * h);
              const double a = analytic.dw(i, j);
              const double denom =
                  std::max({std::fabs(a), std::fabs(fd), 1e-6 * max_grad, 1e-12});
              worst = std::max(worst, std::fabs(a - fd) / denom);
              ++checked;
            }
          }
          ++configs;
        }
      }
    }
  }

  // Backprop baseline against the same oracle.
  for (int rep = 0; rep < 52; ++rep) {
    Mlp mlp(5, {6, 4}, rng);
    mlp.add_head(3, rng);
    const std::vector<double> x = rng.normal_vec(5);
    const int target = static_cast<int>(rng.uniform_int(3));
    const Mlp::Grads grads = mlp.backward(x, target, 0);
    std::vector<double> flat;
    for (const LayerGrad& g : grads.hidden) {
      flat.insert(flat.end(), g.dw.data().begin(), g.dw.data().end());
      flat.insert(flat.end(), g.db.begin(), g.db.end());
    }
    for (const LayerGrad& g : grads.heads) {
      flat.insert(flat.end(), g.dw.data().begin(), g.dw.data().end());
      flat.insert(flat.end(), g.db.begin(), g.db.end());
    }
    double max_grad = 0.0;
    for (double v : flat) max_grad = std::max(max_grad, std::fabs(v));
    auto ce = [&]() {
      const std::vector<double> probs = Mlp::softmax(mlp.forward_logits(x, 0));
      return -std::log(std::max(probs[target], 1e-300));
    };
    std::size_t offset = 0;
    for (auto seg : mlp.param_segments()) {
      for (std::size_t k = 0; k < seg.size(); k += 5) {
        const double saved = seg[k];
        seg[k] = saved + h;
        const double up = ce();
        seg[k] = saved - h;
        const double down = ce();
        seg[k] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = flat[offset + k];
        const double denom =
            std::max({std::fabs(a), std::fabs(fd), 1e-6 * max_grad, 1e-12});
        worst = std::max(worst, std::fabs(a - fd) / denom);
        ++checked;
      }
      offset += seg.size();
    }
    ++configs;
  }

  report(5, worst < 1e-4,
         "analytic gradients match finite differences on " + std::to_string(configs) +
             " configurations / " + std::to_string(checked) + " probes (worst rel err " +
             std::to_string(worst) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 6: one-step inequalities and the phase-plane tangent.

void criterion_single_step() {
  Rng rng(9007);
  std::size_t checked = 0;
  bool goodness_ok = true, activity_ok = true;
  double worst_slope = 0.0;
  while (checked < 100) {
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
    if (e < 0.05 || i_act < 0.05) continue;
    const double inv_sum = 1.0 / (e + i_act);
    const double lr = (0.05 + 0.6 * rng.uniform()) / (2.0 * inv_sum);
    if (2.0 * lr * inv_sum >= 1.0) continue;
    const double ratio = i_act / e;
    const LatentPair updated = sgd_single_step_activity(layer, input, lr);
    const double e_new = sq_norm(updated.pos);
    const double i_new = sq_norm(updated.neg);
    goodness_ok = goodness_ok && e_new / (e_new + i_new) > e / (e + i_act);
    activity_ok = activity_ok && e_new + i_new > e + i_act;
    const double slope_emp = (i_new - i_act) / (e_new - e);
    const double slope_closed = -(1.0 - lr * inv_sum) / (1.0 + lr * ratio * inv_sum);
    worst_slope = std::max(
        worst_slope, std::fabs(slope_emp - slope_closed) / std::fabs(slope_closed));
    ++checked;
  }
  report(6, goodness_ok && activity_ok && worst_slope < 1e-9,
         "one SGD step raises goodness and total activity on 100 states; tangent "
         "matches -(1-lr*S)/(1+lr*R*S) (worst rel err " +
             std::to_string(worst_slope) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 7: Case A / Case B trajectories.

void criterion_dynamics_cases() {
  const auto case_a = dyn_trajectory({0.02, 0.04, 0.1}, 20);
  const auto case_b = dyn_trajectory({0.3, 1.0, 0.1}, 20);
  bool ok = case_a.size() == 21 && case_b.size() == 21;

  // Case A: the low-activity start jumps to a far higher total immediately.
  ok = ok && case_a[1].total > 2.0 * case_a[0].total;
  // Once lr*S < 0.01 the tangent must sit within 0.05 of -1.
  for (std::size_t k = 0; k + 1 < case_a.size(); ++k) {
    if (0.1 / case_a[k].total < 0.01) {
      ok = ok && std::fabs(case_a[k + 1].slope_closed_form + 1.0) < 0.05;
    }
  }
  // Case B: e strictly rises, i strictly falls.
  for (std::size_t k = 1; k < case_b.size(); ++k) {
    ok = ok && case_b[k].e > case_b[k - 1].e;
    ok = ok && case_b[k].i < case_b[k - 1].i;
  }
  report(7, ok,
         "case A (0.02, 0.04) jumps then straightens; case B (0.3, 1.0) is monotone "
         "(20 steps, lr 0.1); total A " +
             fmt(case_a[0].total) + " -> " + fmt(case_a[1].total));
}

// ---------------------------------------------------------------------------
// Criterion 8: footnote probability bound.

void criterion_footnote() {
  const std::vector<double> silent{0.0};
  const double max_negative_probability = 1.0 - ffa_probability(silent, 2.0);
  report(8, std::fabs(max_negative_probability - 0.88) < 0.005,
         "theta = 2 caps p(x is negative) at " + fmt(max_negative_probability) +
             " (expected ~0.88)");
}

// ---------------------------------------------------------------------------
// Criterion 10: metric oracle.

void criterion_metrics_oracle() {
  AccuracyMatrix m(3);
  m.set(0, 0, 0.9);
  m.set(0, 1, 0.8);
  m.set(0, 2, 0.7);
  m.set(1, 1, 0.85);
  m.set(1, 2, 0.6);
  m.set(2, 2, 0.8);
  m.baseline = {0.1, 0.1, 0.1};
  const ClMetrics got = cl_metrics(m);
  const bool ok = std::fabs(got.accuracy - 0.7) < 1e-12 &&
                  got.forward_transfer && std::fabs(*got.forward_transfer - 0.6) < 1e-12 &&
                  got.forgetting && std::fabs(*got.forgetting - 0.225) < 1e-12;
  report(10, ok,
         "hand 3x3 matrix gives Acc " + fmt(got.accuracy) + ", FwT " +
             fmt(got.forward_transfer.value_or(-1)) + ", Fgt " +
             fmt(got.forgetting.value_or(-1)) + " (want 0.7 / 0.6 / 0.225)");
}

// ---------------------------------------------------------------------------
// Criterion 11: GEM feasibility.

void criterion_gem() {
  // Closed-form single constraint.
  const std::vector<double> grad{1.0, -1.0};
  const std::vector<std::vector<double>> single{{0.0, 1.0}};
  const GemProjection proj = gem_project(grad, single, 0.0);
  bool ok = std::fabs(proj.grad[0] - 1.0) < 1e-9 && std::fabs(proj.grad[1]) < 1e-9;

  Rng rng(9011);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t constraints = 2 + rng.uniform_int(3);
    std::vector<double> g = rng.normal_vec(6);
    std::vector<std::vector<double>> mems;
    for (std::size_t t = 0; t < constraints; ++t) mems.push_back(rng.normal_vec(6));
    const GemProjection p = gem_project(g, mems, trial % 2 ? 0.5 : 0.0);
    ok = ok && !p.fallback;
    for (const auto& mem : mems) worst = std::min(worst, dot(p.grad, mem));
  }
  ok = ok && worst >= -1e-8;
  report(11, ok,
         "projected gradients satisfy every memory constraint on 1000 instances "
         "(worst dot " +
             std::to_string(worst) + "); single-constraint matches the closed form");
}

// ---------------------------------------------------------------------------
// Criterion 12: byte-identical reruns.

void criterion_determinism() {
  namespace fs = std::filesystem;
  bool ok = true;
  std::string detail;

  auto rerun_matches = [&](Command command, auto configure, const char* file) {
    const std::string out1 = g_out_root + "/det1";
    const std::string out2 = g_out_root + "/det2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    for (const std::string& out : {out1, out2}) {
      ExperimentConfig cfg(command);
      configure(cfg);
      cfg.set("out", out);
      run_command(cfg);
    }
    const bool same = read_file(out1 + "/" + file) == read_file(out2 + "/" + file);
    if (!same) detail += std::string(" mismatch:") + file;
    return same;
  };

  ok = rerun_matches(Command::Dynamics, [](ExperimentConfig&) {}, "dynamics.csv") && ok;
  ok = rerun_matches(Command::Surface,
                     [](ExperimentConfig& cfg) { cfg.set("grid", "31"); },
                     "surface.csv") &&
       ok;
  if (data_available("mnist")) {
    auto small_train = [&](ExperimentConfig& cfg) {
      cfg.set("data_dir", g_data_dir);
      cfg.set("dataset", "mnist");
      cfg.set("algorithm", "sffa");
      cfg.set("width", "32");
      cfg.set("hidden_layers", "1");
      cfg.set("epochs", "1");
      cfg.set("seed", "5");
    };
    ok = rerun_matches(Command::Train, small_train, "train_log.csv") && ok;
    auto small_cl = [&](ExperimentConfig& cfg) {
      cfg.set("data_dir", g_data_dir);
      cfg.set("dataset", "mnist");
      cfg.set("algorithm", "sffa");
      cfg.set("width", "32");
      cfg.set("hidden_layers", "1");
      cfg.set("epochs", "1");
      cfg.set("runs", "1");
      cfg.set("strategy", "replay");
      cfg.set("seed", "5");
    };
    ok = rerun_matches(Command::Cl, small_cl, "metrics.csv") && ok;
    ok = rerun_matches(Command::Cl, small_cl, "matrix_seed5.csv") && ok;
  } else {
    detail += " (dataset-backed reruns skipped: mnist files not found)";
  }
  report(12, ok, "identical config and seed reproduce byte-identical CSVs" + detail);
}

// ---------------------------------------------------------------------------
// Criteria 1, 9: desk-scale static accuracy and sparsity.

void criteria_static_and_sparsity() {
  if (!data_available("mnist")) {
    report(1, false, "MNIST files not found under " + g_data_dir + "/mnist");
    report(9, false, "skipped: needs the criterion-1 trained model");
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult sffa =
      cmd_train(desk_train_config("sffa", "mnist", 1, g_out_root + "/c1_sffa"));
  const double sffa_minutes = minutes_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  const TrainResult ffa =
      cmd_train(desk_train_config("ffa", "mnist", 1, g_out_root + "/c1_ffa"));
  const double ffa_minutes = minutes_since(t1);

  const auto t2 = std::chrono::steady_clock::now();
  const TrainResult backprop =
      cmd_train(desk_train_config("backprop", "mnist", 1, g_out_root + "/c1_backprop"));
  const double bp_minutes = minutes_since(t2);

  const bool in_budget = sffa_minutes <= 30.0 && ffa_minutes <= 30.0 && bp_minutes <= 30.0;
  report(1,
         sffa.max_test_accuracy >= 0.95 && ffa.max_test_accuracy >= 0.94 &&
             backprop.max_test_accuracy >= 0.97 && in_budget,
         "MNIST desk scale (15 epochs): sffa " + fmt(sffa.max_test_accuracy) +
             " (>=0.95), ffa " + fmt(ffa.max_test_accuracy) + " (>=0.94), backprop " +
             fmt(backprop.max_test_accuracy) + " (>=0.97); minutes " +
             fmt(sffa_minutes) + "/" + fmt(ffa_minutes) + "/" + fmt(bp_minutes));

  // Criterion 9: sparsity of the trained SFFA model plus the unit oracles.
  const std::vector<double> onehot{0.0, 0.0, 1.0, 0.0};
  const std::vector<double> uniform{0.5, 0.5, 0.5, 0.5};
  const bool unit_ok = std::fabs(hoyer(onehot) - 1.0) < 1e-12 &&
                       std::fabs(hoyer(uniform) - 0.0) < 1e-12;
  ExperimentConfig sp_cfg(Command::Sparsity);
  sp_cfg.set("data_dir", g_data_dir);
  sp_cfg.set("dataset", "mnist");
  sp_cfg.set("checkpoint", sffa.checkpoint_path);
  sp_cfg.set("out", g_out_root + "/c9_sparsity");
  const SparsityResult sparsity = cmd_sparsity(sp_cfg);
  report(9, unit_ok && sparsity.positive_mean_hoyer >= 0.90,
         "trained SFFA mean positive-latent Hoyer " + fmt(sparsity.positive_mean_hoyer) +
             " (>=0.90); one-hot/uniform oracles exact");
}

// ---------------------------------------------------------------------------
// Criterion 2: SFFA outperforms FFA on FMNIST.

void criterion_fmnist_ordering() {
  if (!data_available("fmnist")) {
    report(2, false, "FMNIST files not found under " + g_data_dir + "/fmnist");
    return;
  }
  double sffa_sum = 0.0, ffa_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    sffa_sum += cmd_train(desk_train_config("sffa", "fmnist", seed,
                                            g_out_root + "/c2_sffa_s" +
                                                std::to_string(seed)))
                    .max_test_accuracy;
    ffa_sum += cmd_train(desk_train_config("ffa", "fmnist", seed,
                                           g_out_root + "/c2_ffa_s" +
                                               std::to_string(seed)))
                   .max_test_accuracy;
  }
  const double sffa_mean = sffa_sum / 3.0;
  const double ffa_mean = ffa_sum / 3.0;
  report(2, sffa_mean - ffa_mean >= 0.015,
         "FMNIST 3-seed means: sffa " + fmt(sffa_mean) + " vs ffa " + fmt(ffa_mean) +
             " (gap " + fmt(sffa_mean - ffa_mean) + ", >=0.015)");
}

// ---------------------------------------------------------------------------
// Criterion 3: continual-learning sanity.

void criterion_cl() {
  if (!data_available("mnist")) {
    report(3, false, "MNIST files not found under " + g_data_dir + "/mnist");
    return;
  }
  const ClResult naive = cmd_cl(desk_cl_config("class", "naive", g_out_root + "/c3_naive"));
  const ClResult replay =
      cmd_cl(desk_cl_config("class", "replay", g_out_root + "/c3_replay"));
  const ClResult gem = cmd_cl(desk_cl_config("class", "gem", g_out_root + "/c3_gem"));
  const ClResult task_replay =
      cmd_cl(desk_cl_config("task", "replay", g_out_root + "/c3_task_replay"));
  const ClResult domain_replay =
      cmd_cl(desk_cl_config("domain", "replay", g_out_root + "/c3_domain_replay"));

  const bool ok = naive.mean_accuracy >= 0.15 && naive.mean_accuracy <= 0.25 &&
                  replay.mean_accuracy >= 0.80 &&
                  gem.mean_accuracy - naive.mean_accuracy >= 0.30 &&
                  task_replay.mean_accuracy >= 0.96 &&
                  domain_replay.mean_accuracy >= 0.88;
  report(3, ok,
         "SplitMNIST SFFA (3 seeds): class naive " + fmt(naive.mean_accuracy) +
             " (in [0.15,0.25]), class replay " + fmt(replay.mean_accuracy) +
             " (>=0.80), class gem " + fmt(gem.mean_accuracy) +
             " (naive+0.30), task replay " + fmt(task_replay.mean_accuracy) +
             " (>=0.96), domain replay " + fmt(domain_replay.mean_accuracy) +
             " (>=0.88)");
}

}  // namespace

int main() {
  const char* env = std::getenv("FFLEARN_DATA_DIR");
  g_data_dir = env && *env ? env : "data";
  g_out_root = "acceptance_out";
  std::filesystem::create_directories(g_out_root);
  std::printf("data dir: %s\n", g_data_dir.c_str());

  // Fast, dataset-free criteria first.
  criterion_symmetry();
  criterion_gradient_oracle();
  criterion_single_step();
  criterion_dynamics_cases();
  criterion_footnote();
  criterion_metrics_oracle();
  criterion_gem();
  criterion_determinism();

  // Desk-scale training criteria.
  criteria_static_and_sparsity();
  criterion_cl();
  criterion_fmnist_ordering();

  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
