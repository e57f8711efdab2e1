#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/config.hpp"
#include "core/continual.hpp"
#include "core/network.hpp"

namespace ff {

// Command drivers behind the CLI and the shared-library API. Every command
// writes a canonical copy of its resolved configuration plus its CSV outputs
// into the configured `out` directory; all randomness derives from the
// config seed.

struct TrainResult {
  TrainLog log;
  double max_test_accuracy = 0.0;
  std::string checkpoint_path;
  std::string log_path;
};
TrainResult cmd_train(const ExperimentConfig& cfg);

struct ClRun {
  std::uint64_t seed = 0;
  ClMetrics metrics;
};
struct ClResult {
  std::vector<ClRun> runs;
  double mean_accuracy = 0.0;
  double sem_accuracy = 0.0;
  std::optional<double> mean_forward_transfer;
  std::optional<double> mean_forgetting;
};
ClResult cmd_cl(const ExperimentConfig& cfg);

struct DynamicsResult {
  std::vector<DynPoint> trajectory;
  std::string csv_path;
};
DynamicsResult cmd_dynamics(const ExperimentConfig& cfg);

struct SurfaceResult {
  std::size_t rows = 0;
  std::string csv_path;
};
SurfaceResult cmd_surface(const ExperimentConfig& cfg);

struct SparsityResult {
  double positive_mean_hoyer = 0.0;
  double negative_mean_hoyer = 0.0;
  std::string csv_path;
};
SparsityResult cmd_sparsity(const ExperimentConfig& cfg);

// Dispatch by the config's command; used by the C API.
void run_command(const ExperimentConfig& cfg);

}  // namespace ff
