#include "core/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/analysis.hpp"
#include "core/checkpoint.hpp"
#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/idx.hpp"

namespace ff {
namespace {

namespace fs = std::filesystem;

std::string prepare_out_dir(const ExperimentConfig& cfg) {
  const std::string out = cfg.get_string("out");
  if (out.empty()) raise(Errc::invalid_argument, "config: 'out' must not be empty");
  fs::create_directories(out);
  std::ofstream echo(out + "/config.txt", std::ios::binary);
  if (!echo) raise(Errc::io_failure, "cannot write " + out + "/config.txt");
  echo << cfg.echo_text();
  return out;
}

Algorithm parse_algorithm_ff(const std::string& name) {
  if (name == "ffa") return Algorithm::Ffa;
  if (name == "sffa") return Algorithm::Sffa;
  raise(Errc::invalid_argument, "algorithm '" + name + "' is not a forward-forward kind");
}

Activation resolve_activation(const ExperimentConfig& cfg, Algorithm algorithm) {
  const std::string name = cfg.get_string("activation");
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "auto") {
    return algorithm == Algorithm::Ffa ? Activation::ReLU : Activation::Sigmoid;
  }
  raise(Errc::invalid_argument, "activation '" + name + "' (expected auto, relu, sigmoid)");
}

NetworkConfig network_config_from(const ExperimentConfig& cfg, Algorithm algorithm) {
  NetworkConfig nc;
  nc.algorithm = algorithm;
  nc.theta = cfg.get_double("theta");
  nc.epsilon = cfg.get_double("epsilon");
  nc.clamp = cfg.get_double("clamp");
  nc.reg_alpha = cfg.get_double("reg_alpha");
  nc.regularize = cfg.get_bool("regularize");
  nc.residual_input = cfg.get_bool("residual");
  nc.skip_first_layer_goodness = cfg.get_bool("skip_first_goodness");
  nc.goodness_pre_kwta = cfg.get_bool("goodness_pre_kwta");
  nc.divide_by_squared_norm = cfg.get_bool("norm_squared");
  return nc;
}

std::vector<std::size_t> widths_from(const ExperimentConfig& cfg) {
  const std::int64_t layers = cfg.get_int("hidden_layers");
  const std::int64_t width = cfg.get_int("width");
  if (layers < 1) raise(Errc::invalid_argument, "hidden_layers must be >= 1");
  if (width < 1) raise(Errc::invalid_argument, "width must be >= 1");
  return std::vector<std::size_t>(static_cast<std::size_t>(layers),
                                  static_cast<std::size_t>(width));
}

HyperParams hyper_params_from(const ExperimentConfig& cfg) {
  HyperParams hp;
  hp.learning_rate = cfg.get_double("lr");
  hp.batch_size = static_cast<std::size_t>(cfg.get_int("batch"));
  hp.epochs = static_cast<std::size_t>(cfg.get_int("epochs"));
  if (hp.learning_rate <= 0.0) raise(Errc::invalid_argument, "lr must be > 0");
  if (hp.batch_size == 0) raise(Errc::invalid_argument, "batch must be >= 1");
  return hp;
}

Scenario parse_scenario(const std::string& name) {
  if (name == "class") return Scenario::ClassIncremental;
  if (name == "domain") return Scenario::DomainIncremental;
  if (name == "task") return Scenario::TaskIncremental;
  raise(Errc::invalid_argument,
        "scenario '" + name + "' (expected class, domain or task)");
}

StrategyKind parse_strategy(const std::string& name) {
  if (name == "naive") return StrategyKind::Naive;
  if (name == "ewc") return StrategyKind::Ewc;
  if (name == "si") return StrategyKind::Si;
  if (name == "mas") return StrategyKind::Mas;
  if (name == "replay") return StrategyKind::Replay;
  if (name == "gem") return StrategyKind::Gem;
  raise(Errc::invalid_argument, "strategy '" + name +
                                    "' (expected naive, ewc, si, mas, replay or gem)");
}

std::string metric_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("none");
}

}  // namespace

TrainResult cmd_train(const ExperimentConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const DataPaths paths = resolve_data_paths(cfg, /*need_train=*/true);
  const Dataset train_ds = load_dataset(paths.train_images, paths.train_labels);
  const Dataset test_ds = load_dataset(paths.test_images, paths.test_labels);

  const HyperParams hp = hyper_params_from(cfg);
  const Rng master(static_cast<std::uint64_t>(cfg.get_int("seed")));
  const std::string algorithm = cfg.get_string("algorithm");

  TrainResult result;
  result.log_path = out + "/train_log.csv";
  CsvWriter log_csv(result.log_path);
  log_csv.row({"epoch", "train_loss", "test_accuracy"});
  const auto log_epoch = [&](const EpochStats& e) {
    log_csv.row({CsvWriter::num(e.epoch), CsvWriter::num(e.mean_loss),
                 CsvWriter::num(e.test_accuracy)});
    std::fprintf(stderr, "[train] epoch %zu/%zu loss=%.6f test_acc=%.4f\n", e.epoch,
                 hp.epochs, e.mean_loss, e.test_accuracy);
  };

  if (algorithm == "backprop") {
    Rng init_rng = master.split(1);
    Rng train_rng = master.split(2);
    Rng head_rng = master.split(4);
    Mlp mlp(train_ds.images.cols(), widths_from(cfg), init_rng);
    mlp.add_head(static_cast<std::size_t>(train_ds.num_classes), head_rng);
    result.log = mlp.train(train_ds, test_ds, hp, train_rng, 0, log_epoch);
    result.checkpoint_path = out + "/checkpoint.ffnet";
    save_mlp_checkpoint(result.checkpoint_path, mlp);
  } else {
    const Algorithm alg = parse_algorithm_ff(algorithm);
    Rng init_rng = master.split(1);
    Rng train_rng = master.split(2);
    FFNetwork net(network_config_from(cfg, alg), train_ds.images.cols(), widths_from(cfg),
                  resolve_activation(cfg, alg),
                  static_cast<std::size_t>(cfg.get_int("kwta_k")), init_rng);
    LabelCodebook book(static_cast<std::size_t>(cfg.get_int("pattern_size")),
                       cfg.get_double("pattern_density"), master.split(3));
    for (int c = 0; c < train_ds.num_classes; ++c) book.register_class(c);
    const TrainMode mode = cfg.get_string("train_mode") == "all_labels"
                               ? TrainMode::AllLabels
                               : TrainMode::Pair;
    if (cfg.get_string("train_mode") != "pair" && cfg.get_string("train_mode") != "all_labels") {
      raise(Errc::invalid_argument, "train_mode '" + cfg.get_string("train_mode") +
                                        "' (expected pair or all_labels)");
    }
    result.log = net.train(train_ds, test_ds, hp, book, train_rng, mode, log_epoch);
    result.checkpoint_path = out + "/checkpoint.ffnet";
    save_ff_checkpoint(result.checkpoint_path, net, book);
  }
  result.max_test_accuracy = result.log.max_test_accuracy();
  if (result.log.low_activity_events > 0) {
    std::fprintf(stderr, "[train] warning: %zu low-activity latent sets left unnormalized\n",
                 result.log.low_activity_events);
  }
  return result;
}

ClResult cmd_cl(const ExperimentConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const DataPaths paths = resolve_data_paths(cfg, /*need_train=*/true);
  const Dataset train_ds = load_dataset(paths.train_images, paths.train_labels);
  const Dataset test_ds = load_dataset(paths.test_images, paths.test_labels);

  const HyperParams hp = hyper_params_from(cfg);
  const Scenario scenario = parse_scenario(cfg.get_string("scenario"));
  const StrategyKind kind = parse_strategy(cfg.get_string("strategy"));
  const int tasks = static_cast<int>(cfg.get_int("tasks"));
  const std::int64_t runs = cfg.get_int("runs");
  if (runs < 1) raise(Errc::invalid_argument, "runs must be >= 1");

  StrategyParams sp;
  sp.lambda_ewc = cfg.get_double("lambda_ewc");
  sp.lambda_si = cfg.get_double("lambda_si");
  sp.epsilon_si = cfg.get_double("epsilon_si");
  sp.replay_capacity = static_cast<std::size_t>(cfg.get_int("replay_n"));
  sp.gem_per_task = static_cast<std::size_t>(cfg.get_int("gem_m"));
  sp.gem_gamma = cfg.get_double("gem_gamma");
  sp.mas_mu = cfg.get_double("mas_mu");
  sp.mas_alpha = cfg.get_double("mas_alpha");
  sp.importance_samples = static_cast<std::size_t>(cfg.get_int("importance_samples"));

  const std::string algorithm = cfg.get_string("algorithm");
  const std::uint64_t base_seed = static_cast<std::uint64_t>(cfg.get_int("seed"));

  ClResult result;
  CsvWriter metrics_csv(out + "/metrics.csv");
  metrics_csv.row({"seed", "accuracy", "forward_transfer", "forgetting"});
  for (std::int64_t r = 0; r < runs; ++r) {
    const std::uint64_t run_seed = base_seed + static_cast<std::uint64_t>(r);
    Rng master(run_seed);
    Rng stream_rng = master.split(10);
    const TaskStream stream = split_stream(train_ds, test_ds, scenario, tasks, stream_rng);

    std::unique_ptr<ClModel> model;
    if (algorithm == "backprop") {
      Rng init_rng = master.split(1);
      Mlp mlp(train_ds.images.cols(), widths_from(cfg), init_rng);
      model = std::make_unique<MlpClModel>(std::move(mlp), scenario,
                                           stream.classes_per_task, master.split(4));
    } else {
      const Algorithm alg = parse_algorithm_ff(algorithm);
      Rng init_rng = master.split(1);
      FFNetwork net(network_config_from(cfg, alg), train_ds.images.cols(),
                    widths_from(cfg), resolve_activation(cfg, alg),
                    static_cast<std::size_t>(cfg.get_int("kwta_k")), init_rng);
      LabelCodebook book(static_cast<std::size_t>(cfg.get_int("pattern_size")),
                         cfg.get_double("pattern_density"), master.split(3));
      model = std::make_unique<FfClModel>(std::move(net), std::move(book), scenario,
                                          stream.classes_per_task);
    }

    Rng run_rng = master.split(2);
    const auto on_task = [&](std::size_t t, const AccuracyMatrix& m) {
      double mean = 0.0;
      for (std::size_t i = 0; i <= t; ++i) mean += m.at(i, t);
      std::fprintf(stderr, "[cl] seed %llu task %zu/%d mean_seen_acc=%.4f\n",
                   static_cast<unsigned long long>(run_seed), t + 1, tasks,
                   mean / static_cast<double>(t + 1));
    };
    const RunResult run = run_stream(*model, stream, kind, sp, hp, run_rng, on_task);

    CsvWriter matrix_csv(out + "/matrix_seed" + std::to_string(run_seed) + ".csv");
    matrix_csv.row({"task", "after_task", "accuracy"});
    for (std::size_t i = 0; i < run.matrix.tasks(); ++i) {
      matrix_csv.row({CsvWriter::num(i), "-1", CsvWriter::num(run.matrix.baseline[i])});
    }
    for (std::size_t i = 0; i < run.matrix.tasks(); ++i) {
      for (std::size_t j = i; j < run.matrix.tasks(); ++j) {
        matrix_csv.row(
            {CsvWriter::num(i), CsvWriter::num(j), CsvWriter::num(run.matrix.at(i, j))});
      }
    }

    metrics_csv.row({std::to_string(run_seed), CsvWriter::num(run.metrics.accuracy),
                     metric_cell(run.metrics.forward_transfer),
                     metric_cell(run.metrics.forgetting)});
    result.runs.push_back(ClRun{run_seed, run.metrics});
  }

  // Aggregate: mean and standard error over runs.
  const auto aggregate = [&](auto pick) -> std::pair<std::optional<double>, double> {
    std::vector<double> vals;
    for (const ClRun& run : result.runs) {
      if (auto v = pick(run)) vals.push_back(*v);
    }
    if (vals.empty()) return {std::nullopt, 0.0};
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    const double sem = vals.size() > 1
                           ? std::sqrt(var / static_cast<double>(vals.size() - 1)) /
                                 std::sqrt(static_cast<double>(vals.size()))
                           : 0.0;
    return {mean, sem};
  };
  const auto acc = aggregate([](const ClRun& r) { return std::optional<double>(r.metrics.accuracy); });
  const auto fwt = aggregate([](const ClRun& r) { return r.metrics.forward_transfer; });
  const auto fgt = aggregate([](const ClRun& r) { return r.metrics.forgetting; });
  result.mean_accuracy = acc.first.value_or(0.0);
  result.sem_accuracy = acc.second;
  result.mean_forward_transfer = fwt.first;
  result.mean_forgetting = fgt.first;

  CsvWriter summary_csv(out + "/summary.csv");
  summary_csv.row({"metric", "mean", "sem"});
  summary_csv.row({"accuracy", CsvWriter::num(result.mean_accuracy),
                   CsvWriter::num(result.sem_accuracy)});
  summary_csv.row({"forward_transfer", metric_cell(fwt.first), CsvWriter::num(fwt.second)});
  summary_csv.row({"forgetting", metric_cell(fgt.first), CsvWriter::num(fgt.second)});
  return result;
}

DynamicsResult cmd_dynamics(const ExperimentConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  DynState start;
  start.e = cfg.get_double("dyn_e");
  start.i = cfg.get_double("dyn_i");
  start.lr = cfg.get_double("dyn_lr");
  if (start.e <= 0.0) {
    raise(Errc::invalid_argument, "dynamics: dyn_e must be > 0 (ratio R is undefined)");
  }
  if (start.i <= 0.0) raise(Errc::invalid_argument, "dynamics: dyn_i must be > 0");
  const std::int64_t steps = cfg.get_int("dyn_steps");
  if (steps < 0) raise(Errc::invalid_argument, "dynamics: dyn_steps must be >= 0");

  DynamicsResult result;
  result.trajectory = dyn_trajectory(start, static_cast<std::size_t>(steps));
  result.csv_path = out + "/dynamics.csv";
  CsvWriter csv(result.csv_path);
  csv.row({"step", "e", "i", "goodness", "total", "slope_empirical", "slope_closed_form"});
  for (const DynPoint& p : result.trajectory) {
    csv.row({CsvWriter::num(p.step), CsvWriter::num(p.e), CsvWriter::num(p.i),
             CsvWriter::num(p.goodness), CsvWriter::num(p.total),
             CsvWriter::num(p.slope_empirical), CsvWriter::num(p.slope_closed_form)});
  }
  return result;
}

SurfaceResult cmd_surface(const ExperimentConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const std::size_t grid = static_cast<std::size_t>(cfg.get_int("grid"));
  const std::string algorithm = cfg.get_string("algorithm");
  std::vector<SurfacePoint> points;
  if (algorithm == "ffa") {
    points = surface_ffa(grid, cfg.get_double("activity_max"), cfg.get_double("theta_max"));
  } else if (algorithm == "sffa") {
    points = surface_sffa(grid, cfg.get_double("epsilon"));
  } else {
    raise(Errc::invalid_argument, "surface: algorithm must be ffa or sffa");
  }
  SurfaceResult result;
  result.rows = points.size();
  result.csv_path = out + "/surface.csv";
  CsvWriter csv(result.csv_path);
  csv.row({"x", "y", "p"});
  for (const SurfacePoint& p : points) {
    csv.row({CsvWriter::num(p.x), CsvWriter::num(p.y), CsvWriter::num(p.p)});
  }
  return result;
}

SparsityResult cmd_sparsity(const ExperimentConfig& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const std::string checkpoint = cfg.get_string("checkpoint");
  if (checkpoint.empty()) {
    raise(Errc::missing_file, "sparsity: 'checkpoint' must name a trained model file");
  }
  LoadedFf loaded = load_ff_checkpoint(checkpoint);
  const DataPaths paths = resolve_data_paths(cfg, /*need_train=*/false);
  const Dataset test_ds = load_dataset(paths.test_images, paths.test_labels);
  const std::size_t layer = static_cast<std::size_t>(cfg.get_int("layer"));

  Rng rng(static_cast<std::uint64_t>(cfg.get_int("seed")));
  Rng map_rng = rng.split(7);
  const ActivityMap map =
      activity_map(loaded.net, test_ds, loaded.book, layer, map_rng);

  SparsityResult result;
  result.positive_mean_hoyer = map.positive_mean_hoyer;
  result.negative_mean_hoyer = map.negative_mean_hoyer;
  result.csv_path = out + "/sparsity.csv";

  const std::string algorithm = algorithm_name(loaded.net.config().algorithm);
  const std::string dataset = cfg.get_string("dataset");
  CsvWriter csv(result.csv_path);
  csv.row({"algorithm", "polarity", "dataset", "score"});
  csv.row({algorithm, "positive", dataset, CsvWriter::num(map.positive_mean_hoyer)});
  csv.row({algorithm, "negative", dataset, CsvWriter::num(map.negative_mean_hoyer)});

  CsvWriter hist_csv(out + "/active_hist.csv");
  hist_csv.row({"polarity", "active_count", "count"});
  for (std::size_t k = 0; k < map.positive_hist.size(); ++k) {
    if (map.positive_hist[k]) {
      hist_csv.row({"positive", CsvWriter::num(k), CsvWriter::num(map.positive_hist[k])});
    }
  }
  for (std::size_t k = 0; k < map.negative_hist.size(); ++k) {
    if (map.negative_hist[k]) {
      hist_csv.row({"negative", CsvWriter::num(k), CsvWriter::num(map.negative_hist[k])});
    }
  }

  CsvWriter map_csv(out + "/activity_map.csv");
  map_csv.row({"neuron", "positive_sum", "negative_sum"});
  for (std::size_t j = 0; j < map.positive_sum.size(); ++j) {
    map_csv.row({CsvWriter::num(j), CsvWriter::num(map.positive_sum[j]),
                 CsvWriter::num(map.negative_sum[j])});
  }
  return result;
}

void run_command(const ExperimentConfig& cfg) {
  switch (cfg.command()) {
    case Command::Train: cmd_train(cfg); return;
    case Command::Cl: cmd_cl(cfg); return;
    case Command::Dynamics: cmd_dynamics(cfg); return;
    case Command::Surface: cmd_surface(cfg); return;
    case Command::Sparsity: cmd_sparsity(cfg); return;
  }
}

}  // namespace ff
