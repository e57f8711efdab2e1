#include "core/analysis.hpp"

#include <cmath>
#include <cstring>

#include "core/error.hpp"

namespace ff {

double hoyer(std::span<const double> v) {
  if (v.size() < 2) raise(Errc::invalid_argument, "hoyer: need at least 2 coordinates");
  const double l1 = l1_norm(v);
  const double l2 = std::sqrt(sq_norm(v));
  if (l2 == 0.0) raise(Errc::invalid_argument, "hoyer: undefined on the zero vector");
  const double root_n = std::sqrt(static_cast<double>(v.size()));
  return (root_n - l1 / l2) / (root_n - 1.0);
}

std::size_t active_count(std::span<const double> v, double threshold_frac) {
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) {
    raise(Errc::invalid_argument, "active_count: threshold_frac must lie in (0, 1)");
  }
  double total = 0.0;
  for (double x : v) total += x;
  if (total <= 0.0) return 0;
  const double threshold = threshold_frac * total;
  std::size_t count = 0;
  for (double x : v) {
    if (x > threshold) ++count;
  }
  return count;
}

ActivityMap activity_map(const FFNetwork& net, const Dataset& ds,
                         const LabelCodebook& book, std::size_t layer, Rng& rng) {
  if (layer >= net.layers().size()) {
    raise(Errc::invalid_argument, "activity_map: layer " + std::to_string(layer) +
                                      " outside network of " +
                                      std::to_string(net.layers().size()));
  }
  const std::size_t width = net.layers()[layer].width();
  ActivityMap map;
  map.positive_sum.assign(width, 0.0);
  map.negative_sum.assign(width, 0.0);
  map.positive_hist.assign(width + 1, 0);
  map.negative_hist.assign(width + 1, 0);
  map.samples = ds.size();

  double pos_hoyer = 0.0, neg_hoyer = 0.0;
  std::size_t pos_scored = 0, neg_scored = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const SamplePair pair = make_pair(ds.images.row_span(r), ds.labels[r], book, rng);
    const auto pos_traces = net.forward(pair.positive);
    const auto neg_traces = net.forward(pair.negative);
    const std::vector<double>& pos_latent = pos_traces[layer].latent;
    const std::vector<double>& neg_latent = neg_traces[layer].latent;
    for (std::size_t j = 0; j < width; ++j) {
      map.positive_sum[j] += pos_latent[j];
      map.negative_sum[j] += neg_latent[j];
    }
    map.positive_hist[active_count(pos_latent)] += 1;
    map.negative_hist[active_count(neg_latent)] += 1;
    if (sq_norm(pos_latent) > 0.0) {
      pos_hoyer += hoyer(pos_latent);
      ++pos_scored;
    }
    if (sq_norm(neg_latent) > 0.0) {
      neg_hoyer += hoyer(neg_latent);
      ++neg_scored;
    }
  }
  map.positive_mean_hoyer = pos_scored ? pos_hoyer / static_cast<double>(pos_scored) : 0.0;
  map.negative_mean_hoyer = neg_scored ? neg_hoyer / static_cast<double>(neg_scored) : 0.0;
  return map;
}

std::vector<SurfacePoint> surface_ffa(std::size_t resolution, double activity_max,
                                      double theta_max) {
  if (resolution < 2) raise(Errc::invalid_argument, "surface: resolution must be >= 2");
  std::vector<SurfacePoint> grid;
  grid.reserve(resolution * resolution);
  for (std::size_t yi = 0; yi < resolution; ++yi) {
    const double theta = theta_max * static_cast<double>(yi) / (resolution - 1);
    for (std::size_t xi = 0; xi < resolution; ++xi) {
      const double activity = activity_max * static_cast<double>(xi) / (resolution - 1);
      grid.push_back({activity, theta, logistic(activity - theta)});
    }
  }
  return grid;
}

std::vector<SurfacePoint> surface_sffa(std::size_t resolution, double epsilon) {
  if (resolution < 2) raise(Errc::invalid_argument, "surface: resolution must be >= 2");
  std::vector<SurfacePoint> grid;
  grid.reserve(resolution * resolution);
  for (std::size_t yi = 0; yi < resolution; ++yi) {
    const double neg = static_cast<double>(yi) / (resolution - 1);
    for (std::size_t xi = 0; xi < resolution; ++xi) {
      const double pos = static_cast<double>(xi) / (resolution - 1);
      grid.push_back({pos, neg, sffa_goodness(pos, neg, epsilon)});
    }
  }
  return grid;
}

DynState dyn_step(const DynState& s) {
  if (s.e <= 0.0) {
    raise(Errc::numeric_failure,
          "dyn_step: positive-set activity must be > 0 (ratio R undefined)");
  }
  if (s.i <= 0.0) {
    raise(Errc::numeric_failure, "dyn_step: negative-set activity must be > 0");
  }
  const double ratio = s.i / s.e;
  const double inv_sum = 1.0 / (s.e + s.i);
  const double e_scale = 1.0 + 2.0 * s.lr * ratio * inv_sum;
  const double i_scale = 1.0 - 2.0 * s.lr * inv_sum;
  DynState next = s;
  next.e = e_scale * e_scale * s.e;
  next.i = i_scale * i_scale * s.i;
  return next;
}

double dyn_slope_closed_form(const DynState& s) {
  const double ratio = s.i / s.e;
  const double inv_sum = 1.0 / (s.e + s.i);
  return -(1.0 - s.lr * inv_sum) / (1.0 + s.lr * ratio * inv_sum);
}

std::vector<DynPoint> dyn_trajectory(const DynState& start, std::size_t steps) {
  std::vector<DynPoint> out;
  out.reserve(steps + 1);
  DynState state = start;
  DynPoint first;
  first.step = 0;
  first.e = state.e;
  first.i = state.i;
  first.goodness = state.e / (state.e + state.i);
  first.total = state.e + state.i;
  first.slope_closed_form = dyn_slope_closed_form(state);
  first.slope_empirical = first.slope_closed_form;
  out.push_back(first);
  for (std::size_t k = 1; k <= steps; ++k) {
    const DynState prev = state;
    state = dyn_step(state);
    DynPoint point;
    point.step = k;
    point.e = state.e;
    point.i = state.i;
    point.goodness = state.e / (state.e + state.i);
    point.total = state.e + state.i;
    point.slope_empirical = (state.i - prev.i) / (state.e - prev.e);
    point.slope_closed_form = dyn_slope_closed_form(prev);
    out.push_back(point);
  }
  return out;
}

}  // namespace ff
