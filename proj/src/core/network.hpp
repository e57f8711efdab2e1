#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/encoding.hpp"
#include "core/goodness.hpp"
#include "core/matrix.hpp"
#include "core/optim.hpp"
#include "core/rng.hpp"

namespace ff {

// One trainable forward-only layer. The first pos_count output neurons form
// the positive set; the remainder the negative set (pos_count == width for
// plain FFA). kwta_k == 0 disables the winner-take-all step.
struct FFLayer {
  Matrix weights;             // in_dim x width
  std::vector<double> bias;   // width
  Activation activation = Activation::ReLU;
  std::size_t pos_count = 0;
  std::size_t kwta_k = 0;
  AdamState adam_w;
  AdamState adam_b;

  std::size_t in_dim() const { return weights.rows(); }
  std::size_t width() const { return weights.cols(); }
};

struct NetworkConfig {
  Algorithm algorithm = Algorithm::Sffa;
  double theta = 2.0;        // FFA probability shift
  double epsilon = 1e-8;     // ratio-goodness guard
  double clamp = 1e-4;       // probability clamp in the loss
  double reg_alpha = 1.0;    // activity-regularizer scale
  bool regularize = true;
  bool residual_input = true;          // feed the embedded input to every layer
  bool skip_first_layer_goodness = false;
  bool divide_by_squared_norm = false; // alternate normalization variant
  // Read goodness (and the local loss) off the pre-k-WTA activation; the
  // forwarded latent stays masked either way.
  bool goodness_pre_kwta = false;
};

struct HyperParams {
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;
  std::size_t epochs = 100;
};

enum class TrainMode { Pair, AllLabels };

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double test_accuracy = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  std::size_t low_activity_events = 0;
  double max_test_accuracy() const;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Per-layer gradient of the local loss.
struct LayerGrad {
  Matrix dw;
  std::vector<double> db;
};

struct Prediction {
  std::vector<double> goodness;  // aligned with the candidate label order
  int label = -1;
};

// Batch rows ready for layer-local training: embedded inputs plus a polarity
// flag per row.
struct TrainBatch {
  Matrix inputs;
  std::vector<char> positive;
};

class FFNetwork {
 public:
  FFNetwork(NetworkConfig cfg, std::size_t input_dim, std::vector<std::size_t> widths,
            Activation activation, std::size_t kwta_k, Rng& init_rng);

  const NetworkConfig& config() const { return cfg_; }
  NetworkConfig& config() { return cfg_; }
  std::size_t input_dim() const { return input_dim_; }
  std::vector<FFLayer>& layers() { return layers_; }
  const std::vector<FFLayer>& layers() const { return layers_; }

  // Single-sample forward pass with per-layer traces (for analysis/tests).
  struct LayerTrace {
    std::vector<double> latent;      // post-activation, post-k-WTA
    std::vector<double> normalized;  // latent after the normalization step
    double goodness = 0.0;           // squared norm (FFA) or ratio score (SFFA)
    bool low_activity = false;
  };
  std::vector<LayerTrace> forward(std::span<const double> x) const;

  // Sum of per-layer goodness, honoring skip_first_layer_goodness.
  double goodness_sum(std::span<const double> x) const;

  // Mean local loss and its gradient for every layer from one pass over the
  // batch. Layer inputs are the normalized outputs of the preceding layer at
  // current weights.
  std::pair<std::vector<LayerGrad>, double> local_gradients(const TrainBatch& batch) const;

  // Adam step on every layer with the supplied gradients.
  void apply_gradients(const std::vector<LayerGrad>& grads, double lr);

  // Online layer-wise training: per batch, each layer is trained and updated
  // before its refreshed output feeds the next layer. Pair mode contrasts the
  // true label against one sampled wrong label; AllLabels embeds every
  // registered label and trains each goodness coordinate as its own binary
  // target. Logs mean loss and full test accuracy per epoch.
  TrainLog train(const Dataset& train_ds, const Dataset& test_ds, const HyperParams& hp,
                 LabelCodebook& book, Rng& rng, TrainMode mode,
                 const EpochCallback& on_epoch = {});

  Prediction predict(std::span<const double> image, const LabelCodebook& book,
                     std::span<const int> labels) const;

  // Argmax-goodness predictions for a whole dataset (images are raw, labels
  // are the candidate set to score).
  std::vector<int> predict_batch(const Matrix& images, const LabelCodebook& book,
                                 std::span<const int> labels) const;

  double evaluate_accuracy(const Dataset& ds, const LabelCodebook& book,
                           std::span<const int> labels) const;

  // Gradient of || goodness vector ||^2 with respect to all parameters,
  // flattened in segment order; used by importance-based continual strategies.
  std::vector<double> output_sq_norm_gradient(std::span<const double> image,
                                              const LabelCodebook& book,
                                              std::span<const int> labels) const;

  // Parameter access in stable segment order (per layer: weights then bias).
  std::vector<std::span<double>> param_segments();
  std::vector<std::span<const double>> param_segments() const;
  std::size_t param_count() const;

  mutable std::size_t low_activity_events = 0;

 private:
  friend struct FFNetworkTestAccess;

  struct BatchStats {
    Matrix latent;                // rows masked by k-WTA
    Matrix loss_latent;           // pre-mask activations when goodness_pre_kwta
    std::vector<double> pos_sq;   // FFA: whole-layer squared norm
    std::vector<double> neg_sq;   // SFFA only
    std::vector<double> prob;
    std::vector<double> l1;
    const Matrix& loss_view() const { return loss_latent.empty() ? latent : loss_latent; }
  };

  BatchStats forward_layer_batch(const FFLayer& layer, const Matrix& x) const;
  // dLoss/dA rows for the batch plus the mean loss.
  std::pair<Matrix, double> loss_backward_rows(const FFLayer& layer, const BatchStats& stats,
                                               const std::vector<char>& positive) const;
  void normalize_rows(Matrix& latent, const FFLayer& layer) const;
  Matrix next_layer_input(const Matrix& normalized, const Matrix& embedded) const;

  NetworkConfig cfg_;
  std::size_t input_dim_ = 0;
  std::vector<FFLayer> layers_;
};

// Single-sample local loss of one layer (forward included); the reference
// the finite-difference tests differentiate.
double layer_local_loss(const FFLayer& layer, const NetworkConfig& cfg,
                        std::span<const double> input, bool is_positive);

// Analytic gradient of layer_local_loss with respect to the layer's weights
// and bias. For the unregularized, unclamped, no-bias ReLU positive case this
// reduces to -R*S*2 f(A_j) f'(A_j) x_i on positive-set neurons and
// +S*2 f(A_j) f'(A_j) x_i on negative-set ones. When the probability sits
// outside the clamp interval, the cross-entropy factor is held at the clamp
// bound instead of going flat, so pinned layers keep a restoring update.
LayerGrad layer_gradient(const FFLayer& layer, const NetworkConfig& cfg,
                         std::span<const double> input, bool is_positive);

// One plain-SGD update of a bias-free ReLU layer on a unit-norm input, using
// the bare ratio loss. Refuses when 2*lr*S >= 1, where the negative-set
// pre-activations would flip sign. Returns the refreshed latent pair, whose
// set activities scale by (1 + 2*lr*R*S)^2 and (1 - 2*lr*S)^2.
LatentPair sgd_single_step_activity(FFLayer& layer, std::span<const double> x, double lr);

}  // namespace ff
