#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/dataset.hpp"
#include "core/matrix.hpp"
#include "core/network.hpp"
#include "core/optim.hpp"
#include "core/rng.hpp"

namespace ff {

// Gradient-backprop MLP used as the comparison model: ReLU hidden stack plus
// one or more linear softmax heads. Task-incremental runs register one head
// per task; class-incremental runs grow head 0 with zero-initialized rows as
// new classes appear.
class Mlp {
 public:
  Mlp(std::size_t input_dim, std::vector<std::size_t> hidden_widths, Rng& init_rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_heads() const { return heads_.size(); }
  std::size_t head_classes(std::size_t head) const;

  // Adds a softmax head with `classes` outputs; returns its id.
  std::size_t add_head(std::size_t classes, Rng& init_rng);

  // Appends `extra` zero-initialized class rows to an existing head.
  void grow_head(std::size_t head, std::size_t extra);

  std::vector<double> forward_logits(std::span<const double> x, std::size_t head) const;
  static std::vector<double> softmax(std::span<const double> logits);

  struct Grads {
    std::vector<LayerGrad> hidden;
    std::vector<LayerGrad> heads;  // one entry per head; untouched heads stay zero
    double mean_loss = 0.0;
  };

  // Mean softmax cross-entropy gradient over the batch. `row_head` selects the
  // head each row trains (sized 1 to broadcast).
  Grads gradients(const Matrix& x, std::span<const int> targets,
                  std::span<const std::size_t> row_head) const;

  // Single-sample reverse-mode gradients (row_head broadcast of the one head).
  Grads backward(std::span<const double> x, int target, std::size_t head) const;

  void apply_gradients(const Grads& grads, double lr);

  // Mini-batch Adam training against head `head`; logs mean loss and test
  // accuracy per epoch.
  TrainLog train(const Dataset& train_ds, const Dataset& test_ds, const HyperParams& hp,
                 Rng& rng, std::size_t head = 0, const EpochCallback& on_epoch = {});

  std::vector<int> predict_batch(const Matrix& images, std::size_t head) const;
  double evaluate_accuracy(const Dataset& ds, std::size_t head) const;

  // Flat gradient of ||logits||^2 for one sample (importance estimation).
  std::vector<double> output_sq_norm_gradient(std::span<const double> x,
                                              std::size_t head) const;

  // Flat parameter order: hidden (weights, bias) pairs then per-head pairs.
  std::vector<std::span<double>> param_segments();
  std::vector<std::span<const double>> param_segments() const;
  std::size_t param_count() const;

  struct Dense {
    Matrix w;
    std::vector<double> b;
    AdamState adam_w;
    AdamState adam_b;
  };
  std::vector<Dense>& hidden() { return hidden_; }
  const std::vector<Dense>& hidden() const { return hidden_; }
  // Head weights are (classes x hidden_width) so class rows append contiguously.
  std::vector<Dense>& heads() { return heads_; }
  const std::vector<Dense>& heads() const { return heads_; }

 private:
  Matrix hidden_forward(const Matrix& x, std::vector<Matrix>* activations) const;

  std::size_t input_dim_ = 0;
  std::vector<Dense> hidden_;
  std::vector<Dense> heads_;
};

}  // namespace ff
