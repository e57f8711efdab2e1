#include "core/encoding.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace ff {

LabelCodebook::LabelCodebook(std::size_t pattern_size, double density, Rng rng)
    : pattern_size_(pattern_size), density_(density), rng_(rng) {
  if (pattern_size == 0) raise(Errc::invalid_argument, "codebook: pattern_size must be >= 1");
  if (density <= 0.0 || density >= 1.0) {
    raise(Errc::invalid_argument, "codebook: density must lie in (0, 1)");
  }
}

void LabelCodebook::register_class(int label) {
  if (patterns_.count(label)) return;
  std::vector<std::uint8_t> pattern(pattern_size_);
  for (auto& bit : pattern) bit = rng_.uniform() < density_ ? 1 : 0;
  patterns_.emplace(label, std::move(pattern));
}

std::span<const std::uint8_t> LabelCodebook::pattern(int label) const {
  auto it = patterns_.find(label);
  if (it == patterns_.end()) {
    raise(Errc::invalid_argument,
          "codebook: class " + std::to_string(label) + " is not registered");
  }
  return it->second;
}

std::vector<int> LabelCodebook::labels() const {
  std::vector<int> out;
  out.reserve(patterns_.size());
  for (const auto& [label, pattern] : patterns_) out.push_back(label);
  return out;
}

LabelCodebook LabelCodebook::restore(std::size_t pattern_size, double density, Rng rng,
                                     std::map<int, std::vector<std::uint8_t>> patterns) {
  LabelCodebook book(pattern_size, density, rng);
  book.patterns_ = std::move(patterns);
  return book;
}

void embed_into(std::span<double> row, int label, const LabelCodebook& book) {
  const auto pattern = book.pattern(label);
  if (pattern.size() > row.size()) {
    raise(Errc::dimension_mismatch, "embed: pattern of " + std::to_string(pattern.size()) +
                                        " exceeds image of " + std::to_string(row.size()));
  }
  for (std::size_t i = 0; i < pattern.size(); ++i) row[i] = pattern[i];
}

std::vector<double> embed(std::span<const double> image, int label,
                          const LabelCodebook& book) {
  std::vector<double> out(image.begin(), image.end());
  embed_into(out, label, book);
  return out;
}

SamplePair make_pair(std::span<const double> image, int true_label,
                     const LabelCodebook& book, Rng& rng) {
  const std::vector<int> labels = book.labels();
  if (labels.size() < 2) {
    raise(Errc::invalid_argument, "make_pair: need at least 2 registered classes");
  }
  std::vector<int> wrong;
  wrong.reserve(labels.size());
  for (int label : labels) {
    if (label != true_label) wrong.push_back(label);
  }
  if (wrong.size() == labels.size()) {
    raise(Errc::invalid_argument,
          "make_pair: true label " + std::to_string(true_label) + " is not registered");
  }
  const int negative_label = wrong[rng.uniform_int(wrong.size())];
  SamplePair pair;
  pair.positive = embed(image, true_label, book);
  pair.negative = embed(image, negative_label, book);
  pair.negative_label = negative_label;
  return pair;
}

std::vector<std::vector<double>> embed_all(std::span<const double> image,
                                           const LabelCodebook& book,
                                           std::span<const int> labels) {
  if (labels.empty()) raise(Errc::invalid_argument, "embed_all: empty label set");
  std::vector<std::vector<double>> out;
  out.reserve(labels.size());
  for (int label : labels) out.push_back(embed(image, label, book));
  return out;
}

}  // namespace ff
