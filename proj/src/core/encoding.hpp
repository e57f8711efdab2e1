#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "core/rng.hpp"

namespace ff {

// Per-class random binary patterns written over the first pattern_size pixels
// of an input (the Symba-style label embedding). Registration is append-only:
// a class keeps its first pattern for the lifetime of the codebook, so
// continual streams can add classes without disturbing earlier ones.
class LabelCodebook {
 public:
  LabelCodebook(std::size_t pattern_size, double density, Rng rng);

  // Draws and stores a pattern for `label` unless already present.
  void register_class(int label);

  bool has(int label) const { return patterns_.count(label) != 0; }
  std::span<const std::uint8_t> pattern(int label) const;

  // Registered labels in ascending order.
  std::vector<int> labels() const;

  std::size_t size() const { return patterns_.size(); }
  std::size_t pattern_size() const { return pattern_size_; }
  double density() const { return density_; }
  const Rng& pattern_rng() const { return rng_; }

  // Checkpoint support: rebuilds a codebook with explicit patterns.
  static LabelCodebook restore(std::size_t pattern_size, double density, Rng rng,
                               std::map<int, std::vector<std::uint8_t>> patterns);
  const std::map<int, std::vector<std::uint8_t>>& raw_patterns() const { return patterns_; }

 private:
  std::size_t pattern_size_;
  double density_;
  Rng rng_;
  std::map<int, std::vector<std::uint8_t>> patterns_;
};

// Copy of `image` with the label's pattern written over the leading pixels.
std::vector<double> embed(std::span<const double> image, int label,
                          const LabelCodebook& book);

// In-place variant for batch assembly: `row` already holds the image.
void embed_into(std::span<double> row, int label, const LabelCodebook& book);

// Positive sample plus a negative with a uniformly drawn wrong label.
struct SamplePair {
  std::vector<double> positive;
  std::vector<double> negative;
  int negative_label = -1;
};
SamplePair make_pair(std::span<const double> image, int true_label,
                     const LabelCodebook& book, Rng& rng);

// One embedded copy per candidate label, in the order given.
std::vector<std::vector<double>> embed_all(std::span<const double> image,
                                           const LabelCodebook& book,
                                           std::span<const int> labels);

}  // namespace ff
