#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/baseline.hpp"
#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/network.hpp"
#include "core/rng.hpp"

namespace ff {

enum class StrategyKind { Naive, Ewc, Si, Mas, Replay, Gem };

const char* strategy_name(StrategyKind k);

struct StrategyParams {
  double lambda_ewc = 1e5;
  double lambda_si = 1e3;
  double epsilon_si = 0.1;
  std::size_t replay_capacity = 500;
  std::size_t gem_per_task = 20;
  double gem_gamma = 0.5;
  double mas_mu = 1.0;
  double mas_alpha = 0.5;
  // Cap on samples used for the MAS importance pass; 0 means the whole task.
  std::size_t importance_samples = 1024;
};

// acc[i][j] = accuracy on task i's test set after training task j (i <= j),
// plus the untrained per-task reference accuracies.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t tasks);

  std::size_t tasks() const { return tasks_; }
  void set(std::size_t task, std::size_t after, double accuracy);
  double at(std::size_t task, std::size_t after) const;
  bool filled(std::size_t task, std::size_t after) const;

  std::vector<double> baseline;

 private:
  std::size_t tasks_ = 0;
  std::vector<double> acc_;
  std::vector<char> filled_;
};

struct ClMetrics {
  double accuracy = 0.0;
  std::optional<double> forward_transfer;
  std::optional<double> forgetting;
};

// Final-accuracy, forward-transfer and forgetting measures of a completed
// run. The matrix must hold every entry with task <= after.
ClMetrics cl_metrics(const AccuracyMatrix& matrix);

// Rows of raw images with scenario labels and originating task ids.
struct ClBatch {
  Matrix images;
  std::vector<int> labels;
  std::vector<int> task_ids;

  std::size_t size() const { return labels.size(); }
};

// Model-agnostic training surface the continual strategies drive: parameter
// segments (append-only growth between tasks), flat training-loss gradients,
// optimizer steps, and task-conditioned evaluation.
class ClModel {
 public:
  virtual ~ClModel() = default;

  virtual Scenario scenario() const = 0;
  virtual void begin_task(const Task& task, int task_index) = 0;
  virtual std::vector<std::span<double>> param_segments() = 0;
  virtual std::vector<double> flat_grad(const ClBatch& batch, double* mean_loss) = 0;
  virtual void apply_flat_grad(std::span<const double> grad, double lr) = 0;
  virtual double evaluate(const Task& task, int task_index) = 0;
  // Flat gradient of the squared norm of the model output for one sample
  // (goodness vector for forward-only models, logits for backprop).
  virtual std::vector<double> output_grad(std::span<const double> image, int task_id) = 0;
  virtual std::unique_ptr<ClModel> clone() const = 0;

  std::vector<double> flat_params();
};

class FfClModel : public ClModel {
 public:
  FfClModel(FFNetwork net, LabelCodebook book, Scenario scenario, int shared_labels);

  Scenario scenario() const override { return scenario_; }
  void begin_task(const Task& task, int task_index) override;
  std::vector<std::span<double>> param_segments() override;
  std::vector<double> flat_grad(const ClBatch& batch, double* mean_loss) override;
  void apply_flat_grad(std::span<const double> grad, double lr) override;
  double evaluate(const Task& task, int task_index) override;
  std::vector<double> output_grad(std::span<const double> image, int task_id) override;
  std::unique_ptr<ClModel> clone() const override;

  const std::vector<int>& seen_classes() const { return seen_classes_; }
  const std::vector<std::vector<int>>& task_classes() const { return task_classes_; }
  FFNetwork& network() { return net_; }
  const LabelCodebook& codebook() const { return book_; }

 private:
  std::vector<int> context_labels(int task_id) const;

  FFNetwork net_;
  LabelCodebook book_;
  Scenario scenario_;
  std::vector<int> shared_labels_;
  std::vector<int> seen_classes_;
  std::vector<std::vector<int>> task_classes_;
};

class MlpClModel : public ClModel {
 public:
  MlpClModel(Mlp mlp, Scenario scenario, int shared_labels, Rng head_rng);

  Scenario scenario() const override { return scenario_; }
  void begin_task(const Task& task, int task_index) override;
  std::vector<std::span<double>> param_segments() override;
  std::vector<double> flat_grad(const ClBatch& batch, double* mean_loss) override;
  void apply_flat_grad(std::span<const double> grad, double lr) override;
  double evaluate(const Task& task, int task_index) override;
  std::vector<double> output_grad(std::span<const double> image, int task_id) override;
  std::unique_ptr<ClModel> clone() const override;

  Mlp& mlp() { return mlp_; }
  const std::vector<int>& class_order() const { return class_order_; }

 private:
  void row_target(int label, int task_id, std::size_t* head, int* target) const;

  Mlp mlp_;
  Scenario scenario_;
  int shared_labels_ = 0;
  Rng head_rng_;
  std::vector<int> class_order_;                    // Class IL: head row -> class id
  std::vector<std::map<int, int>> task_class_map_;  // Task IL: per task original -> local
};

// Reservoir-sampled episodic memory: uniform over every row seen so far.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void update(const ClBatch& task_data, Rng& rng);
  // Concatenates an equal-size draw (with replacement) from the buffer onto
  // the batch; empty buffers leave it untouched.
  ClBatch mix(const ClBatch& batch, Rng& rng) const;

  std::size_t size() const { return images_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<std::vector<double>>& images() const { return images_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<int>& task_ids() const { return task_ids_; }

 private:
  std::size_t capacity_;
  std::size_t seen_ = 0;
  std::vector<std::vector<double>> images_;
  std::vector<int> labels_;
  std::vector<int> task_ids_;
};

// Projects `grad` so its dot product with every memory gradient is
// non-negative, solving the dual of the cone projection over the violated
// constraints by projected-gradient iteration (dual variables offset by
// `gamma`). Falls back to the unprojected gradient if the solver stalls.
struct GemProjection {
  std::vector<double> grad;
  bool fallback = false;
  std::size_t iterations = 0;
};
GemProjection gem_project(std::span<const double> grad,
                          const std::vector<std::vector<double>>& memory_grads,
                          double gamma);

// Quadratic parameter-anchoring helpers shared by EWC/SI/MAS:
// value = scale * sum_k importance_k * (theta_k - anchor_k)^2.
double quadratic_penalty(std::span<const double> importance, std::span<const double> params,
                         std::span<const double> anchor, double scale);
// grad_k += grad_scale * importance_k * (theta_k - anchor_k).
void add_quadratic_penalty_grad(std::span<double> grad, std::span<const double> importance,
                                std::span<const double> params,
                                std::span<const double> anchor, double grad_scale);

// Path-integral bookkeeping of synaptic relevance: omega_k += -g_k * dtheta_k.
void si_accumulate_step(std::span<double> omega, std::span<const double> task_grad,
                        std::span<const double> pre_params,
                        std::span<const double> post_params);
// Omega_k += omega_k / ((theta_k - anchor_k)^2 + eps); omega resets to zero.
void si_consolidate(std::span<double> omega_accum, std::span<double> omega_traj,
                    std::span<const double> params, std::span<const double> anchor,
                    double eps_si);

// One continual strategy with its consolidated state. The harness calls the
// hooks; all state lives flat, aligned with the model's segment layout.
class Strategy {
 public:
  Strategy(StrategyKind kind, StrategyParams params);

  StrategyKind kind() const { return kind_; }
  const StrategyParams& params() const { return params_; }

  void align_layout(ClModel& model);
  ClBatch prepare_batch(const ClBatch& batch, Rng& rng) const;
  void transform_grad(ClModel& model, std::vector<double>& grad);
  void after_step(ClModel& model, const std::vector<double>& task_grad,
                  const std::vector<double>& pre_params);
  void after_task(ClModel& model, const Task& task, int task_index,
                  const HyperParams& hp, Rng& rng);

  // Current quadratic penalty (zero before any consolidation); exposed so the
  // regularizer arithmetic keeps a direct oracle.
  double penalty_value(ClModel& model) const;
  std::vector<double> penalty_gradient(ClModel& model) const;

  const ReplayBuffer& replay_buffer() const { return replay_; }
  std::size_t gem_fallbacks() const { return gem_fallbacks_; }
  const std::vector<double>& importance() const { return importance_; }
  const std::vector<double>& anchor() const { return anchor_; }

 private:
  struct SegmentLayout {
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
  };
  static SegmentLayout layout_of(ClModel& model);
  static void match_layout(std::vector<double>& flat, const SegmentLayout& old_layout,
                           const SegmentLayout& new_layout);

  StrategyKind kind_;
  StrategyParams params_;
  SegmentLayout layout_;
  bool has_anchor_ = false;
  std::vector<double> anchor_;
  std::vector<double> importance_;  // EWC Fisher / SI Omega / MAS Omega
  std::vector<double> si_traj_;     // SI per-task omega
  ReplayBuffer replay_;
  std::vector<ClBatch> gem_memories_;
  std::size_t gem_fallbacks_ = 0;
};

struct RunResult {
  AccuracyMatrix matrix;
  ClMetrics metrics;
  std::size_t gem_fallbacks = 0;
};

using TaskCallback = std::function<void(std::size_t task_index, const AccuracyMatrix&)>;

// Trains the model over the stream with the strategy's hooks applied and the
// matrix populated after every task.
RunResult run_stream(ClModel& model, const TaskStream& stream, StrategyKind kind,
                     const StrategyParams& params, const HyperParams& hp, Rng& rng,
                     const TaskCallback& on_task = {});

}  // namespace ff
