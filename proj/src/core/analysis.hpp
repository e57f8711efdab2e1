#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/network.hpp"
#include "core/rng.hpp"

namespace ff {

// Normalized L1/L2 sparsity in [0, 1]; 1 is a one-hot vector, 0 all-equal.
// Undefined (error) on the zero vector.
double hoyer(std::span<const double> v);

// Coordinates holding more than threshold_frac of the vector's total mass.
std::size_t active_count(std::span<const double> v, double threshold_frac = 0.01);

// Aggregated per-neuron activity of one layer over a dataset, split into
// positive passes (true label embedded) and negative passes (a random wrong
// label embedded), with active-neuron histograms and mean Hoyer scores.
struct ActivityMap {
  std::vector<double> positive_sum;
  std::vector<double> negative_sum;
  std::vector<std::size_t> positive_hist;  // index = active_count, unit bins
  std::vector<std::size_t> negative_hist;
  double positive_mean_hoyer = 0.0;
  double negative_mean_hoyer = 0.0;
  std::size_t samples = 0;
};
ActivityMap activity_map(const FFNetwork& net, const Dataset& ds,
                         const LabelCodebook& book, std::size_t layer, Rng& rng);

struct SurfacePoint {
  double x = 0.0;
  double y = 0.0;
  double p = 0.0;
};

// Probability grids: FFA over (total activity in [0, activity_max], theta in
// [0, theta_max]); SFFA over positive/negative set activity in [0, 1]^2.
std::vector<SurfacePoint> surface_ffa(std::size_t resolution, double activity_max = 8.0,
                                      double theta_max = 4.0);
std::vector<SurfacePoint> surface_sffa(std::size_t resolution, double epsilon = 1e-8);

// Closed-form single-layer update dynamics in activity space. e and i are the
// squared activities of the positive and negative neuron sets; one step
// rescales them by (1 + 2*lr*R*S)^2 and (1 - 2*lr*S)^2 with R = i/e and
// S = 1/(e+i).
struct DynState {
  double e = 0.0;
  double i = 0.0;
  double lr = 0.0;
};

DynState dyn_step(const DynState& s);

// Tangent slope di/de of the update at the given state: -(1-lr*S)/(1+lr*R*S).
double dyn_slope_closed_form(const DynState& s);

struct DynPoint {
  std::size_t step = 0;
  double e = 0.0;
  double i = 0.0;
  double goodness = 0.0;
  double total = 0.0;
  double slope_empirical = 0.0;   // (i' - i) / (e' - e) of the step landing here
  double slope_closed_form = 0.0; // evaluated at the step's starting state
};

// Iterates dyn_step from `start`, recording per-step slopes. Row 0 is the
// starting state with slopes of the first step.
std::vector<DynPoint> dyn_trajectory(const DynState& start, std::size_t steps);

}  // namespace ff
