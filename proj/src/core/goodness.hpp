#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ff {

enum class Algorithm { Ffa, Sffa };
enum class Activation { ReLU, Sigmoid };

const char* algorithm_name(Algorithm a);
const char* activation_name(Activation a);

// A layer's post-activation output split into the positive-set and
// negative-set halves. Plain-FFA latents use an empty `neg`.
struct LatentPair {
  std::vector<double> pos;
  std::vector<double> neg;
};

double logistic(double x);

// Ratio goodness of the split latent: (|pos|^2 + eps) / (|pos|^2 + |neg|^2 + 2 eps).
// Symmetric by construction: p(pos, neg) + p(neg, pos) == 1.
double sffa_goodness(double pos_sq, double neg_sq, double epsilon);
double sffa_goodness(const LatentPair& latent, double epsilon);

// Classic goodness probability: logistic(|l|^2 - theta).
double ffa_probability(std::span<const double> latent, double theta);

// Keeps the k largest entries and zeroes the rest; ties resolve to the lowest
// index. k >= length leaves the vector unchanged.
void kwta_inplace(std::span<double> v, std::size_t k);
std::vector<double> kwta(std::span<const double> v, std::size_t k);

// Rescales a latent so the next layer cannot read the goodness off its
// magnitude. FFA divides by the Euclidean norm. SFFA rescales each neuron set
// to unit norm so the post-normalization goodness sits at exactly 0.5; with
// `divide_by_squared_norm` each set is instead divided by its squared norm
// (the variant that does not equalize set activity, kept for comparison).
// A set with norm below 1e-12 is left untouched and reported as low activity.
struct NormalizeResult {
  bool low_activity = false;
};
NormalizeResult normalize_latent_ffa(std::span<double> latent);
NormalizeResult normalize_latent_sffa(std::span<double> latent, std::size_t pos_count,
                                      bool divide_by_squared_norm = false);

// Local layer loss: binary cross-entropy on the clamped goodness probability
// times the activity multiplier (1 + exp(-reg_alpha * latent_l1)) that pushes
// latents away from the low-activity region where the update factors diverge.
struct LossConfig {
  double clamp = 1e-4;        // probability clamp to [clamp, 1-clamp]
  double reg_alpha = 1.0;     // activity-regularizer scale
  bool regularize = true;     // disable to recover the bare BCE loss
};
double local_loss(double goodness_p, bool is_positive, double latent_l1,
                  const LossConfig& cfg);

}  // namespace ff
