#include "core/continual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "core/error.hpp"

namespace ff {

const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::Naive: return "naive";
    case StrategyKind::Ewc: return "ewc";
    case StrategyKind::Si: return "si";
    case StrategyKind::Mas: return "mas";
    case StrategyKind::Replay: return "replay";
    case StrategyKind::Gem: return "gem";
  }
  return "?";
}

AccuracyMatrix::AccuracyMatrix(std::size_t tasks)
    : baseline(tasks, 0.0), tasks_(tasks), acc_(tasks * tasks, 0.0),
      filled_(tasks * tasks, 0) {}

void AccuracyMatrix::set(std::size_t task, std::size_t after, double accuracy) {
  acc_[task * tasks_ + after] = accuracy;
  filled_[task * tasks_ + after] = 1;
}

double AccuracyMatrix::at(std::size_t task, std::size_t after) const {
  return acc_[task * tasks_ + after];
}

bool AccuracyMatrix::filled(std::size_t task, std::size_t after) const {
  return filled_[task * tasks_ + after] != 0;
}

ClMetrics cl_metrics(const AccuracyMatrix& matrix) {
  const std::size_t t = matrix.tasks();
  if (t == 0) raise(Errc::invalid_argument, "cl_metrics: empty matrix");
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i; j < t; ++j) {
      if (!matrix.filled(i, j)) {
        raise(Errc::invalid_argument, "cl_metrics: entry (" + std::to_string(i) + ", " +
                                          std::to_string(j) + ") not populated");
      }
    }
  }
  ClMetrics m;
  double acc = 0.0;
  for (std::size_t i = 0; i < t; ++i) acc += matrix.at(i, t - 1);
  m.accuracy = acc / static_cast<double>(t);
  if (t >= 2) {
    double fwt = 0.0;
    for (std::size_t k = 1; k < t; ++k) {
      fwt += matrix.at(k - 1, k) - matrix.baseline[k];
    }
    m.forward_transfer = fwt / static_cast<double>(t - 1);
    double fgt = 0.0;
    for (std::size_t i = 0; i + 1 < t; ++i) {
      fgt += matrix.at(i, i) - matrix.at(i, t - 1);
    }
    m.forgetting = fgt / static_cast<double>(t - 1);
  }
  return m;
}

std::vector<double> ClModel::flat_params() {
  std::vector<double> flat;
  for (auto seg : param_segments()) flat.insert(flat.end(), seg.begin(), seg.end());
  return flat;
}

// ---------------------------------------------------------------------------
// Forward-only model adapter

FfClModel::FfClModel(FFNetwork net, LabelCodebook book, Scenario scenario,
                     int shared_labels)
    : net_(std::move(net)), book_(std::move(book)), scenario_(scenario) {
  for (int c = 0; c < shared_labels; ++c) shared_labels_.push_back(c);
}

void FfClModel::begin_task(const Task& task, int task_index) {
  if (static_cast<std::size_t>(task_index) < task_classes_.size()) return;
  if (static_cast<std::size_t>(task_index) != task_classes_.size()) {
    raise(Errc::invalid_argument, "begin_task: tasks must arrive in order");
  }
  switch (scenario_) {
    case Scenario::ClassIncremental:
      for (int c : task.classes) {
        if (!book_.has(c)) {
          book_.register_class(c);
          seen_classes_.push_back(c);
        }
      }
      task_classes_.push_back(task.classes);
      break;
    case Scenario::DomainIncremental:
      for (int c : shared_labels_) book_.register_class(c);
      task_classes_.push_back(shared_labels_);
      break;
    case Scenario::TaskIncremental:
      for (int c : task.classes) book_.register_class(c);
      task_classes_.push_back(task.classes);
      break;
  }
}

std::vector<int> FfClModel::context_labels(int task_id) const {
  switch (scenario_) {
    case Scenario::ClassIncremental: {
      std::vector<int> sorted = seen_classes_;
      std::sort(sorted.begin(), sorted.end());
      return sorted;
    }
    case Scenario::DomainIncremental:
      return shared_labels_;
    case Scenario::TaskIncremental:
      if (task_id < 0 || static_cast<std::size_t>(task_id) >= task_classes_.size()) {
        raise(Errc::invalid_argument, "context: unknown task " + std::to_string(task_id));
      }
      return task_classes_[task_id];
  }
  return {};
}

std::vector<std::span<double>> FfClModel::param_segments() {
  return net_.param_segments();
}

std::vector<double> FfClModel::flat_grad(const ClBatch& batch, double* mean_loss) {
  // Expand each sample into one embedded row per candidate label of its
  // context; the coordinate matching the sample's label is the positive one.
  std::size_t total_rows = 0;
  std::vector<std::vector<int>> contexts(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    contexts[r] = context_labels(batch.task_ids[r]);
    total_rows += contexts[r].size();
  }
  TrainBatch tb;
  tb.inputs = Matrix(total_rows, batch.images.cols());
  tb.positive.assign(total_rows, 0);
  std::size_t row = 0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    for (int label : contexts[r]) {
      std::memcpy(tb.inputs.row(row), batch.images.row(r),
                  batch.images.cols() * sizeof(double));
      embed_into(tb.inputs.row_span(row), label, book_);
      tb.positive[row] = label == batch.labels[r] ? 1 : 0;
      ++row;
    }
  }
  auto [grads, loss] = net_.local_gradients(tb);
  if (mean_loss) *mean_loss = loss;
  std::vector<double> flat;
  flat.reserve(net_.param_count());
  for (const LayerGrad& g : grads) {
    flat.insert(flat.end(), g.dw.data().begin(), g.dw.data().end());
    flat.insert(flat.end(), g.db.begin(), g.db.end());
  }
  return flat;
}

void FfClModel::apply_flat_grad(std::span<const double> grad, double lr) {
  std::vector<LayerGrad> grads;
  std::size_t offset = 0;
  for (const FFLayer& layer : net_.layers()) {
    LayerGrad g;
    g.dw = Matrix(layer.in_dim(), layer.width());
    std::memcpy(g.dw.data().data(), grad.data() + offset,
                g.dw.size() * sizeof(double));
    offset += g.dw.size();
    g.db.assign(grad.begin() + offset, grad.begin() + offset + layer.width());
    offset += layer.width();
    grads.push_back(std::move(g));
  }
  if (offset != grad.size()) {
    raise(Errc::dimension_mismatch, "apply_flat_grad: layout mismatch");
  }
  net_.apply_gradients(grads, lr);
}

double FfClModel::evaluate(const Task& task, int task_index) {
  const std::vector<int> labels = context_labels(task_index);
  return net_.evaluate_accuracy(task.test, book_, labels);
}

std::vector<double> FfClModel::output_grad(std::span<const double> image, int task_id) {
  const std::vector<int> labels = context_labels(task_id);
  return net_.output_sq_norm_gradient(image, book_, labels);
}

std::unique_ptr<ClModel> FfClModel::clone() const {
  return std::make_unique<FfClModel>(*this);
}

// ---------------------------------------------------------------------------
// Backprop model adapter

MlpClModel::MlpClModel(Mlp mlp, Scenario scenario, int shared_labels, Rng head_rng)
    : mlp_(std::move(mlp)), scenario_(scenario), shared_labels_(shared_labels),
      head_rng_(head_rng) {}

void MlpClModel::begin_task(const Task& task, int task_index) {
  if (static_cast<std::size_t>(task_index) < task_class_map_.size()) return;
  if (static_cast<std::size_t>(task_index) != task_class_map_.size()) {
    raise(Errc::invalid_argument, "begin_task: tasks must arrive in order");
  }
  switch (scenario_) {
    case Scenario::ClassIncremental: {
      std::size_t fresh = 0;
      for (int c : task.classes) {
        if (std::find(class_order_.begin(), class_order_.end(), c) == class_order_.end()) {
          class_order_.push_back(c);
          ++fresh;
        }
      }
      if (mlp_.num_heads() == 0) {
        mlp_.add_head(fresh, head_rng_);
      } else if (fresh > 0) {
        mlp_.grow_head(0, fresh);
      }
      break;
    }
    case Scenario::DomainIncremental:
      if (mlp_.num_heads() == 0) mlp_.add_head(shared_labels_, head_rng_);
      break;
    case Scenario::TaskIncremental:
      mlp_.add_head(task.classes.size(), head_rng_);
      break;
  }
  task_class_map_.push_back(task.class_map);
}

void MlpClModel::row_target(int label, int task_id, std::size_t* head, int* target) const {
  switch (scenario_) {
    case Scenario::ClassIncremental: {
      auto it = std::find(class_order_.begin(), class_order_.end(), label);
      if (it == class_order_.end()) {
        raise(Errc::invalid_argument, "mlp: class " + std::to_string(label) + " unseen");
      }
      *head = 0;
      *target = static_cast<int>(it - class_order_.begin());
      break;
    }
    case Scenario::DomainIncremental:
      *head = 0;
      *target = label;
      break;
    case Scenario::TaskIncremental:
      if (task_id < 0 || static_cast<std::size_t>(task_id) >= task_class_map_.size()) {
        raise(Errc::invalid_argument, "mlp: unknown task " + std::to_string(task_id));
      }
      *head = static_cast<std::size_t>(task_id);
      *target = task_class_map_[task_id].at(label);
      break;
  }
}

std::vector<std::span<double>> MlpClModel::param_segments() {
  return mlp_.param_segments();
}

std::vector<double> MlpClModel::flat_grad(const ClBatch& batch, double* mean_loss) {
  std::vector<int> targets(batch.size());
  std::vector<std::size_t> heads(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    row_target(batch.labels[r], batch.task_ids[r], &heads[r], &targets[r]);
  }
  const Mlp::Grads grads = mlp_.gradients(batch.images, targets, heads);
  if (mean_loss) *mean_loss = grads.mean_loss;
  std::vector<double> flat;
  flat.reserve(mlp_.param_count());
  for (const LayerGrad& g : grads.hidden) {
    flat.insert(flat.end(), g.dw.data().begin(), g.dw.data().end());
    flat.insert(flat.end(), g.db.begin(), g.db.end());
  }
  for (const LayerGrad& g : grads.heads) {
    flat.insert(flat.end(), g.dw.data().begin(), g.dw.data().end());
    flat.insert(flat.end(), g.db.begin(), g.db.end());
  }
  return flat;
}

void MlpClModel::apply_flat_grad(std::span<const double> grad, double lr) {
  Mlp::Grads grads;
  std::size_t offset = 0;
  auto take = [&](const Mlp::Dense& dense) {
    LayerGrad g;
    g.dw = Matrix(dense.w.rows(), dense.w.cols());
    std::memcpy(g.dw.data().data(), grad.data() + offset, g.dw.size() * sizeof(double));
    offset += g.dw.size();
    g.db.assign(grad.begin() + offset, grad.begin() + offset + dense.b.size());
    offset += dense.b.size();
    return g;
  };
  for (const Mlp::Dense& layer : mlp_.hidden()) grads.hidden.push_back(take(layer));
  for (const Mlp::Dense& head : mlp_.heads()) grads.heads.push_back(take(head));
  if (offset != grad.size()) {
    raise(Errc::dimension_mismatch, "apply_flat_grad: layout mismatch");
  }
  mlp_.apply_gradients(grads, lr);
}

double MlpClModel::evaluate(const Task& task, int task_index) {
  if (task.test.size() == 0) return 0.0;
  std::size_t head = 0;
  switch (scenario_) {
    case Scenario::ClassIncremental:
    case Scenario::DomainIncremental:
      head = 0;
      break;
    case Scenario::TaskIncremental:
      head = static_cast<std::size_t>(task_index);
      break;
  }
  const std::vector<int> rows = mlp_.predict_batch(task.test.images, head);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int predicted_label = rows[i];
    if (scenario_ == Scenario::ClassIncremental) {
      predicted_label = class_order_[rows[i]];
    }
    int want = task.test.labels[i];
    if (scenario_ == Scenario::TaskIncremental) {
      want = task_class_map_[task_index].at(want);
    }
    if (predicted_label == want) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

std::vector<double> MlpClModel::output_grad(std::span<const double> image, int task_id) {
  std::size_t head = 0;
  if (scenario_ == Scenario::TaskIncremental) head = static_cast<std::size_t>(task_id);
  return mlp_.output_sq_norm_gradient(image, head);
}

std::unique_ptr<ClModel> MlpClModel::clone() const {
  return std::make_unique<MlpClModel>(*this);
}

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

void ReplayBuffer::update(const ClBatch& task_data, Rng& rng) {
  for (std::size_t r = 0; r < task_data.size(); ++r) {
    ++seen_;
    std::vector<double> image(task_data.images.row(r),
                              task_data.images.row(r) + task_data.images.cols());
    if (images_.size() < capacity_) {
      images_.push_back(std::move(image));
      labels_.push_back(task_data.labels[r]);
      task_ids_.push_back(task_data.task_ids[r]);
    } else {
      const std::uint64_t slot = rng.uniform_int(seen_);
      if (slot < capacity_) {
        images_[slot] = std::move(image);
        labels_[slot] = task_data.labels[r];
        task_ids_[slot] = task_data.task_ids[r];
      }
    }
  }
}

ClBatch ReplayBuffer::mix(const ClBatch& batch, Rng& rng) const {
  if (images_.empty()) return batch;
  const std::size_t extra = batch.size();
  ClBatch out;
  out.images = Matrix(batch.size() + extra, batch.images.cols());
  out.labels.resize(batch.size() + extra);
  out.task_ids.resize(batch.size() + extra);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    std::memcpy(out.images.row(r), batch.images.row(r),
                batch.images.cols() * sizeof(double));
    out.labels[r] = batch.labels[r];
    out.task_ids[r] = batch.task_ids[r];
  }
  for (std::size_t r = 0; r < extra; ++r) {
    const std::size_t pick = rng.uniform_int(images_.size());
    std::memcpy(out.images.row(batch.size() + r), images_[pick].data(),
                batch.images.cols() * sizeof(double));
    out.labels[batch.size() + r] = labels_[pick];
    out.task_ids[batch.size() + r] = task_ids_[pick];
  }
  return out;
}

// ---------------------------------------------------------------------------
// GEM projection

GemProjection gem_project(std::span<const double> grad,
                          const std::vector<std::vector<double>>& memory_grads,
                          double gamma) {
  GemProjection result;
  result.grad.assign(grad.begin(), grad.end());
  if (memory_grads.empty()) return result;

  std::vector<double> dots(memory_grads.size());
  std::vector<std::size_t> active;
  for (std::size_t t = 0; t < memory_grads.size(); ++t) {
    dots[t] = dot(grad, memory_grads[t]);
    if (dots[t] < 0.0) active.push_back(t);
  }
  if (active.empty()) return result;

  constexpr std::size_t kMaxIterations = 10000;
  constexpr double kTolerance = 1e-9;
  std::size_t spent = 0;

  for (;;) {
    const std::size_t n = active.size();
    // Dual QP over the active set: minimize 0.5 v^T (M M^T) v + (M g)^T v
    // subject to v >= gamma. At the optimum M (g + M^T v) equals the KKT
    // multipliers, hence every active constraint ends non-negative.
    Matrix p(n, n);
    std::vector<double> q(n);
    for (std::size_t a = 0; a < n; ++a) {
      q[a] = dots[active[a]];
      for (std::size_t b = 0; b <= a; ++b) {
        const double v = dot(memory_grads[active[a]], memory_grads[active[b]]);
        p(a, b) = v;
        p(b, a) = v;
      }
    }
    double lipschitz = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      double row = 0.0;
      for (std::size_t b = 0; b < n; ++b) row += std::fabs(p(a, b));
      lipschitz = std::max(lipschitz, row);
    }
    if (lipschitz <= 0.0) return result;

    double scale = 1.0;
    for (double d : q) scale = std::max(scale, std::fabs(d));
    const double step = 1.0 / lipschitz;
    std::vector<double> v(n, gamma), gradient(n);
    bool converged = false;
    while (spent < kMaxIterations) {
      ++spent;
      double residual = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        double acc = q[a];
        for (std::size_t b = 0; b < n; ++b) acc += p(a, b) * v[b];
        gradient[a] = acc;
        const double kkt = v[a] > gamma ? std::fabs(acc) : std::max(0.0, -acc);
        residual = std::max(residual, kkt);
      }
      if (residual <= kTolerance * scale) {
        converged = true;
        break;
      }
      for (std::size_t a = 0; a < n; ++a) {
        v[a] = std::max(gamma, v[a] - step * gradient[a]);
      }
    }
    if (!converged) {
      result.grad.assign(grad.begin(), grad.end());
      result.fallback = true;
      result.iterations = spent;
      std::fprintf(stderr,
                   "[gem] projection did not converge in %zu iterations; "
                   "using the unprojected gradient\n",
                   kMaxIterations);
      return result;
    }

    result.grad.assign(grad.begin(), grad.end());
    for (std::size_t a = 0; a < n; ++a) {
      const std::vector<double>& mem = memory_grads[active[a]];
      for (std::size_t i = 0; i < mem.size(); ++i) result.grad[i] += v[a] * mem[i];
    }
    result.iterations = spent;

    // Constraints outside the working set may now be violated; grow and redo.
    bool grew = false;
    for (std::size_t t = 0; t < memory_grads.size(); ++t) {
      if (std::find(active.begin(), active.end(), t) != active.end()) continue;
      if (dot(result.grad, memory_grads[t]) < -kTolerance * scale) {
        active.push_back(t);
        grew = true;
      }
    }
    if (!grew) return result;
    if (spent >= kMaxIterations) {
      result.grad.assign(grad.begin(), grad.end());
      result.fallback = true;
      std::fprintf(stderr, "[gem] projection stalled while growing the active set\n");
      return result;
    }
  }
}

// ---------------------------------------------------------------------------
// Quadratic-penalty helpers

double quadratic_penalty(std::span<const double> importance, std::span<const double> params,
                         std::span<const double> anchor, double scale) {
  double acc = 0.0;
  for (std::size_t i = 0; i < importance.size(); ++i) {
    const double d = params[i] - anchor[i];
    acc += importance[i] * d * d;
  }
  return scale * acc;
}

void add_quadratic_penalty_grad(std::span<double> grad, std::span<const double> importance,
                                std::span<const double> params,
                                std::span<const double> anchor, double grad_scale) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] += grad_scale * importance[i] * (params[i] - anchor[i]);
  }
}

void si_accumulate_step(std::span<double> omega, std::span<const double> task_grad,
                        std::span<const double> pre_params,
                        std::span<const double> post_params) {
  for (std::size_t i = 0; i < omega.size(); ++i) {
    omega[i] += -task_grad[i] * (post_params[i] - pre_params[i]);
  }
}

void si_consolidate(std::span<double> omega_accum, std::span<double> omega_traj,
                    std::span<const double> params, std::span<const double> anchor,
                    double eps_si) {
  for (std::size_t i = 0; i < omega_accum.size(); ++i) {
    const double d = params[i] - anchor[i];
    omega_accum[i] += omega_traj[i] / (d * d + eps_si);
    omega_traj[i] = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Strategy

Strategy::Strategy(StrategyKind kind, StrategyParams params)
    : kind_(kind), params_(params), replay_(params.replay_capacity) {}

Strategy::SegmentLayout Strategy::layout_of(ClModel& model) {
  SegmentLayout layout;
  for (auto seg : model.param_segments()) {
    layout.sizes.push_back(seg.size());
    layout.total += seg.size();
  }
  return layout;
}

void Strategy::match_layout(std::vector<double>& flat, const SegmentLayout& old_layout,
                            const SegmentLayout& new_layout) {
  if (flat.empty()) {
    flat.assign(new_layout.total, 0.0);
    return;
  }
  std::vector<double> out(new_layout.total, 0.0);
  std::size_t old_off = 0, new_off = 0;
  for (std::size_t s = 0; s < new_layout.sizes.size(); ++s) {
    const std::size_t old_size = s < old_layout.sizes.size() ? old_layout.sizes[s] : 0;
    std::memcpy(out.data() + new_off, flat.data() + old_off,
                std::min(old_size, new_layout.sizes[s]) * sizeof(double));
    old_off += old_size;
    new_off += new_layout.sizes[s];
  }
  flat = std::move(out);
}

void Strategy::align_layout(ClModel& model) {
  const SegmentLayout fresh = layout_of(model);
  if (fresh.sizes != layout_.sizes) {
    match_layout(anchor_, layout_, fresh);
    match_layout(importance_, layout_, fresh);
    match_layout(si_traj_, layout_, fresh);
    layout_ = fresh;
  }
  // SI measures each task's parameter drift against the values at task start;
  // the first task anchors at the initialization. Omega is zero until the
  // first consolidation, so the penalty stays zero on task one.
  if (kind_ == StrategyKind::Si && !has_anchor_) {
    anchor_ = model.flat_params();
  }
}

ClBatch Strategy::prepare_batch(const ClBatch& batch, Rng& rng) const {
  if (kind_ != StrategyKind::Replay) return batch;
  return replay_.mix(batch, rng);
}

void Strategy::transform_grad(ClModel& model, std::vector<double>& grad) {
  switch (kind_) {
    case StrategyKind::Naive:
    case StrategyKind::Replay:
      return;
    case StrategyKind::Ewc:
    case StrategyKind::Si:
    case StrategyKind::Mas: {
      if (!has_anchor_) return;
      const std::vector<double> params = model.flat_params();
      const double grad_scale = kind_ == StrategyKind::Ewc ? params_.lambda_ewc
                                : kind_ == StrategyKind::Si ? 2.0 * params_.lambda_si
                                                            : 2.0 * params_.mas_mu;
      add_quadratic_penalty_grad(grad, importance_, params, anchor_, grad_scale);
      return;
    }
    case StrategyKind::Gem: {
      if (gem_memories_.empty()) return;
      std::vector<std::vector<double>> memory_grads;
      memory_grads.reserve(gem_memories_.size());
      for (ClBatch& mem : gem_memories_) {
        memory_grads.push_back(model.flat_grad(mem, nullptr));
      }
      GemProjection proj = gem_project(grad, memory_grads, params_.gem_gamma);
      if (proj.fallback) ++gem_fallbacks_;
      grad = std::move(proj.grad);
      return;
    }
  }
}

void Strategy::after_step(ClModel& model, const std::vector<double>& task_grad,
                          const std::vector<double>& pre_params) {
  if (kind_ != StrategyKind::Si) return;
  const std::vector<double> post = model.flat_params();
  si_accumulate_step(si_traj_, task_grad, pre_params, post);
}

void Strategy::after_task(ClModel& model, const Task& task, int task_index,
                          const HyperParams& hp, Rng& rng) {
  switch (kind_) {
    case StrategyKind::Naive:
      return;
    case StrategyKind::Ewc: {
      // Fisher diagonal: mean squared training-loss gradient over the task.
      std::vector<double> fisher(layout_.total, 0.0);
      std::size_t batches = 0;
      for (std::size_t start = 0; start < task.train.size(); start += hp.batch_size) {
        const std::size_t end = std::min(start + hp.batch_size, task.train.size());
        ClBatch batch;
        batch.images = Matrix(end - start, task.train.images.cols());
        batch.labels.resize(end - start);
        batch.task_ids.assign(end - start, task_index);
        for (std::size_t r = start; r < end; ++r) {
          std::memcpy(batch.images.row(r - start), task.train.images.row(r),
                      batch.images.cols() * sizeof(double));
          batch.labels[r - start] = task.train.labels[r];
        }
        const std::vector<double> g = model.flat_grad(batch, nullptr);
        for (std::size_t i = 0; i < fisher.size(); ++i) fisher[i] += g[i] * g[i];
        ++batches;
      }
      if (batches > 0) {
        for (double& f : fisher) f /= static_cast<double>(batches);
      }
      for (std::size_t i = 0; i < importance_.size(); ++i) importance_[i] += fisher[i];
      anchor_ = model.flat_params();
      has_anchor_ = true;
      return;
    }
    case StrategyKind::Si: {
      const std::vector<double> params = model.flat_params();
      si_consolidate(importance_, si_traj_, params, anchor_, params_.epsilon_si);
      anchor_ = params;
      has_anchor_ = true;
      return;
    }
    case StrategyKind::Mas: {
      const std::size_t budget =
          params_.importance_samples == 0
              ? task.train.size()
              : std::min(params_.importance_samples, task.train.size());
      std::vector<double> fresh(layout_.total, 0.0);
      if (budget > 0) {
        const std::vector<std::size_t> perm = rng.permutation(task.train.size());
        for (std::size_t k = 0; k < budget; ++k) {
          const std::vector<double> g = model.output_grad(
              task.train.images.row_span(perm[k]), task_index);
          for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i] += std::fabs(g[i]);
        }
        for (double& v : fresh) v /= static_cast<double>(budget);
      }
      for (std::size_t i = 0; i < importance_.size(); ++i) {
        importance_[i] = params_.mas_alpha * importance_[i] + fresh[i];
      }
      anchor_ = model.flat_params();
      has_anchor_ = true;
      return;
    }
    case StrategyKind::Replay: {
      ClBatch all;
      all.images = task.train.images;
      all.labels = task.train.labels;
      all.task_ids.assign(task.train.size(), task_index);
      replay_.update(all, rng);
      return;
    }
    case StrategyKind::Gem: {
      const std::size_t count = std::min(params_.gem_per_task, task.train.size());
      const std::vector<std::size_t> perm = rng.permutation(task.train.size());
      ClBatch mem;
      mem.images = Matrix(count, task.train.images.cols());
      mem.labels.resize(count);
      mem.task_ids.assign(count, task_index);
      for (std::size_t k = 0; k < count; ++k) {
        std::memcpy(mem.images.row(k), task.train.images.row(perm[k]),
                    mem.images.cols() * sizeof(double));
        mem.labels[k] = task.train.labels[perm[k]];
      }
      gem_memories_.push_back(std::move(mem));
      return;
    }
  }
}

double Strategy::penalty_value(ClModel& model) const {
  if (!has_anchor_) return 0.0;
  const std::vector<double> params = model.flat_params();
  const double scale = kind_ == StrategyKind::Ewc ? params_.lambda_ewc / 2.0
                       : kind_ == StrategyKind::Si ? params_.lambda_si
                       : kind_ == StrategyKind::Mas ? params_.mas_mu
                                                    : 0.0;
  if (scale == 0.0) return 0.0;
  return quadratic_penalty(importance_, params, anchor_, scale);
}

std::vector<double> Strategy::penalty_gradient(ClModel& model) const {
  std::vector<double> grad(layout_.total, 0.0);
  if (!has_anchor_) return grad;
  const std::vector<double> params = model.flat_params();
  const double grad_scale = kind_ == StrategyKind::Ewc ? params_.lambda_ewc
                            : kind_ == StrategyKind::Si ? 2.0 * params_.lambda_si
                            : kind_ == StrategyKind::Mas ? 2.0 * params_.mas_mu
                                                         : 0.0;
  if (grad_scale != 0.0) {
    add_quadratic_penalty_grad(grad, importance_, params, anchor_, grad_scale);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Stream runner

RunResult run_stream(ClModel& model, const TaskStream& stream, StrategyKind kind,
                     const StrategyParams& params, const HyperParams& hp, Rng& rng,
                     const TaskCallback& on_task) {
  if (model.scenario() != stream.scenario) {
    raise(Errc::incompatible, "run_stream: model expects scenario '" +
                                  scenario_name(model.scenario()) + "' but stream is '" +
                                  scenario_name(stream.scenario) + "'");
  }
  const std::size_t t_count = stream.tasks.size();
  RunResult result;
  result.matrix = AccuracyMatrix(t_count);

  // Untrained reference accuracies, measured on a throwaway copy that has every
  // task registered so prediction is defined everywhere.
  {
    std::unique_ptr<ClModel> fresh = model.clone();
    for (std::size_t t = 0; t < t_count; ++t) {
      fresh->begin_task(stream.tasks[t], static_cast<int>(t));
    }
    for (std::size_t t = 0; t < t_count; ++t) {
      result.matrix.baseline[t] = fresh->evaluate(stream.tasks[t], static_cast<int>(t));
    }
  }

  Strategy strategy(kind, params);
  Rng batch_rng = rng.split(1);
  Rng strategy_rng = rng.split(2);
  for (std::size_t t = 0; t < t_count; ++t) {
    const Task& task = stream.tasks[t];
    model.begin_task(task, static_cast<int>(t));
    strategy.align_layout(model);
    for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
      const std::vector<std::size_t> perm = batch_rng.permutation(task.train.size());
      for (std::size_t start = 0; start < perm.size(); start += hp.batch_size) {
        const std::size_t end = std::min(start + hp.batch_size, perm.size());
        ClBatch batch;
        batch.images = Matrix(end - start, task.train.images.cols());
        batch.labels.resize(end - start);
        batch.task_ids.assign(end - start, static_cast<int>(t));
        for (std::size_t i = start; i < end; ++i) {
          std::memcpy(batch.images.row(i - start), task.train.images.row(perm[i]),
                      batch.images.cols() * sizeof(double));
          batch.labels[i - start] = task.train.labels[perm[i]];
        }
        const ClBatch prepared = strategy.prepare_batch(batch, strategy_rng);
        std::vector<double> pre_params;
        if (kind == StrategyKind::Si) pre_params = model.flat_params();
        std::vector<double> task_grad = model.flat_grad(prepared, nullptr);
        std::vector<double> grad = task_grad;
        strategy.transform_grad(model, grad);
        model.apply_flat_grad(grad, hp.learning_rate);
        if (kind == StrategyKind::Si) strategy.after_step(model, task_grad, pre_params);
      }
    }
    strategy.after_task(model, task, static_cast<int>(t), hp, strategy_rng);
    for (std::size_t i = 0; i <= t; ++i) {
      result.matrix.set(i, t, model.evaluate(stream.tasks[i], static_cast<int>(i)));
    }
    if (on_task) on_task(t, result.matrix);
  }
  result.metrics = cl_metrics(result.matrix);
  result.gem_fallbacks = strategy.gem_fallbacks();
  return result;
}

}  // namespace ff
