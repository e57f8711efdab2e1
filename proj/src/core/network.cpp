#include "core/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include "core/error.hpp"

namespace ff {
namespace {

// k-WTA on one row with reusable scratch; strictly-greater values survive,
// ties at the threshold keep the lowest indices.
void kwta_row(double* row, std::size_t w, std::size_t k, std::vector<double>& scratch) {
  if (k >= w) return;
  scratch.assign(row, row + w);
  std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end(),
                   std::greater<double>());
  const double thr = scratch[k - 1];
  std::size_t strict = 0;
  for (std::size_t j = 0; j < w; ++j) {
    if (row[j] > thr) ++strict;
  }
  std::size_t tie_budget = k - strict;
  for (std::size_t j = 0; j < w; ++j) {
    if (row[j] > thr) continue;
    if (row[j] == thr && tie_budget > 0) {
      --tie_budget;
      continue;
    }
    row[j] = 0.0;
  }
}

inline double masked_fprime(double l, Activation act) {
  if (l <= 0.0) return 0.0;
  return act == Activation::ReLU ? 1.0 : l * (1.0 - l);
}

struct RowLossTerms {
  double loss = 0.0;
  double coef_pos = 0.0;  // dLoss/dl_j factor (before * l_j) on the positive set
  double coef_neg = 0.0;  // same on the negative set
  double coef_reg = 0.0;  // additive regularizer factor
};

// Scalar loss terms for one row; shared by the batched and single-sample
// gradient paths so finite-difference checks see one implementation. The
// clamp bounds the 1/p blow-up of the cross-entropy factor but keeps it
// nonzero, so a layer whose probability has pinned at a clamp bound (a silent
// positive set, for instance) still receives a restoring update.
RowLossTerms row_loss_terms(Algorithm algorithm, const NetworkConfig& cfg, double pos_sq,
                            double neg_sq, double p, double l1, bool positive) {
  RowLossTerms t;
  const double c = cfg.clamp;
  const double p_hat = std::clamp(p, c, 1.0 - c);
  const double bce = positive ? -std::log(p_hat) : -std::log(1.0 - p_hat);
  const double mult = cfg.regularize ? 1.0 + std::exp(-cfg.reg_alpha * l1) : 1.0;
  const double dmult = cfg.regularize ? -cfg.reg_alpha * std::exp(-cfg.reg_alpha * l1) : 0.0;
  t.loss = mult * bce;
  const double g_p = positive ? -1.0 / p_hat : 1.0 / (1.0 - p_hat);
  if (algorithm == Algorithm::Sffa) {
    const double total = pos_sq + neg_sq + 2.0 * cfg.epsilon;
    const double dp_de = (neg_sq + cfg.epsilon) / (total * total);
    const double dp_di = -(pos_sq + cfg.epsilon) / (total * total);
    t.coef_pos = mult * g_p * 2.0 * dp_de;
    t.coef_neg = mult * g_p * 2.0 * dp_di;
  } else {
    const double dp_dg = p * (1.0 - p);
    t.coef_pos = mult * g_p * 2.0 * dp_dg;
    t.coef_neg = t.coef_pos;
  }
  t.coef_reg = dmult * bce;
  return t;
}

}  // namespace

double TrainLog::max_test_accuracy() const {
  double best = 0.0;
  for (const auto& e : epochs) best = std::max(best, e.test_accuracy);
  return best;
}

FFNetwork::FFNetwork(NetworkConfig cfg, std::size_t input_dim,
                     std::vector<std::size_t> widths, Activation activation,
                     std::size_t kwta_k, Rng& init_rng)
    : cfg_(cfg), input_dim_(input_dim) {
  if (widths.empty()) raise(Errc::invalid_argument, "network: need at least one layer");
  for (std::size_t idx = 0; idx < widths.size(); ++idx) {
    const std::size_t width = widths[idx];
    if (width == 0) raise(Errc::invalid_argument, "network: zero-width layer");
    if (cfg.algorithm == Algorithm::Sffa && width % 2 != 0) {
      raise(Errc::invalid_argument,
            "network: layer width " + std::to_string(width) +
                " cannot split into equal positive/negative sets");
    }
    const std::size_t in_dim =
        idx == 0 ? input_dim
                 : widths[idx - 1] + (cfg.residual_input ? input_dim : 0);
    FFLayer layer;
    layer.weights = Matrix(in_dim, width);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& w : layer.weights.data()) w = init_rng.normal() * scale;
    layer.bias.assign(width, 0.0);
    layer.activation = activation;
    layer.pos_count = cfg.algorithm == Algorithm::Sffa ? width / 2 : width;
    layer.kwta_k = kwta_k;
    layer.adam_w.resize(layer.weights.size());
    layer.adam_b.resize(width);
    layers_.push_back(std::move(layer));
  }
}

FFNetwork::BatchStats FFNetwork::forward_layer_batch(const FFLayer& layer,
                                                     const Matrix& x) const {
  BatchStats stats;
  stats.latent = matmul(x, layer.weights);
  const std::size_t rows = stats.latent.rows(), w = layer.width();
  if (cfg_.goodness_pre_kwta && layer.kwta_k > 0) {
    stats.loss_latent = Matrix(rows, w);
  }
  stats.pos_sq.resize(rows);
  stats.neg_sq.resize(rows);
  stats.prob.resize(rows);
  stats.l1.resize(rows);
#pragma omp parallel
  {
    thread_local std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(rows); ++ri) {
      const std::size_t r = static_cast<std::size_t>(ri);
      double* row = stats.latent.row(r);
      if (layer.activation == Activation::ReLU) {
        for (std::size_t j = 0; j < w; ++j) row[j] = row[j] + layer.bias[j];
        for (std::size_t j = 0; j < w; ++j) row[j] = row[j] > 0.0 ? row[j] : 0.0;
      } else {
        for (std::size_t j = 0; j < w; ++j) row[j] = logistic(row[j] + layer.bias[j]);
      }
      const double* loss_row = row;
      if (cfg_.goodness_pre_kwta && !stats.loss_latent.empty()) {
        std::memcpy(stats.loss_latent.row(r), row, w * sizeof(double));
        loss_row = stats.loss_latent.row(r);
      }
      if (layer.kwta_k > 0) kwta_row(row, w, layer.kwta_k, scratch);
      double pos_sq = 0.0, neg_sq = 0.0, l1 = 0.0;
      for (std::size_t j = 0; j < layer.pos_count; ++j) {
        pos_sq += loss_row[j] * loss_row[j];
        l1 += loss_row[j];
      }
      for (std::size_t j = layer.pos_count; j < w; ++j) {
        neg_sq += loss_row[j] * loss_row[j];
        l1 += loss_row[j];
      }
      stats.pos_sq[r] = pos_sq;
      stats.neg_sq[r] = neg_sq;
      stats.l1[r] = l1;
      stats.prob[r] = cfg_.algorithm == Algorithm::Sffa
                          ? sffa_goodness(pos_sq, neg_sq, cfg_.epsilon)
                          : logistic(pos_sq + neg_sq - cfg_.theta);
    }
  }
  return stats;
}

std::pair<Matrix, double> FFNetwork::loss_backward_rows(
    const FFLayer& layer, const BatchStats& stats, const std::vector<char>& positive) const {
  const std::size_t rows = stats.latent.rows(), w = layer.width();
  Matrix d(rows, w);
  double loss_sum = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : loss_sum)
  for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(rows); ++ri) {
    const std::size_t r = static_cast<std::size_t>(ri);
    const RowLossTerms t =
        row_loss_terms(cfg_.algorithm, cfg_, stats.pos_sq[r], stats.neg_sq[r],
                       stats.prob[r], stats.l1[r], positive[r] != 0);
    loss_sum += t.loss;
    const double* l = stats.loss_view().row(r);
    double* drow = d.row(r);
    for (std::size_t j = 0; j < w; ++j) {
      const double coef = j < layer.pos_count ? t.coef_pos : t.coef_neg;
      drow[j] = (coef * l[j] + t.coef_reg) * masked_fprime(l[j], layer.activation);
    }
  }
  return {std::move(d), loss_sum / static_cast<double>(rows)};
}

void FFNetwork::normalize_rows(Matrix& latent, const FFLayer& layer) const {
  std::size_t low = 0;
#pragma omp parallel for schedule(static) reduction(+ : low)
  for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(latent.rows()); ++ri) {
    auto row = latent.row_span(static_cast<std::size_t>(ri));
    const NormalizeResult res =
        cfg_.algorithm == Algorithm::Sffa
            ? normalize_latent_sffa(row, layer.pos_count, cfg_.divide_by_squared_norm)
            : normalize_latent_ffa(row);
    if (res.low_activity) ++low;
  }
  low_activity_events += low;
}

Matrix FFNetwork::next_layer_input(const Matrix& normalized, const Matrix& embedded) const {
  if (!cfg_.residual_input) return normalized;
  Matrix out(normalized.rows(), normalized.cols() + embedded.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(out.rows()); ++ri) {
    const std::size_t r = static_cast<std::size_t>(ri);
    std::memcpy(out.row(r), normalized.row(r), normalized.cols() * sizeof(double));
    std::memcpy(out.row(r) + normalized.cols(), embedded.row(r),
                embedded.cols() * sizeof(double));
  }
  return out;
}

std::vector<FFNetwork::LayerTrace> FFNetwork::forward(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    raise(Errc::dimension_mismatch, "forward: input of " + std::to_string(x.size()) +
                                        " does not match network input " +
                                        std::to_string(input_dim_));
  }
  std::vector<LayerTrace> traces;
  Matrix embedded(1, x.size());
  std::memcpy(embedded.row(0), x.data(), x.size() * sizeof(double));
  Matrix cur = embedded;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const FFLayer& layer = layers_[li];
    if (cur.cols() != layer.in_dim()) {
      raise(Errc::dimension_mismatch,
            "forward: layer " + std::to_string(li) + " expects " +
                std::to_string(layer.in_dim()) + " inputs, got " +
                std::to_string(cur.cols()));
    }
    BatchStats stats;
    try {
      stats = forward_layer_batch(layer, cur);
    } catch (const Error& e) {
      if (e.code() == Errc::numeric_failure) {
        raise(Errc::numeric_failure,
              "forward: non-finite activation in layer " + std::to_string(li));
      }
      throw;
    }
    LayerTrace trace;
    trace.latent.assign(stats.latent.row(0), stats.latent.row(0) + layer.width());
    trace.goodness = cfg_.algorithm == Algorithm::Sffa
                         ? stats.prob[0]
                         : stats.pos_sq[0] + stats.neg_sq[0];
    const std::size_t low_before = low_activity_events;
    normalize_rows(stats.latent, layer);
    trace.low_activity = low_activity_events != low_before;
    trace.normalized.assign(stats.latent.row(0), stats.latent.row(0) + layer.width());
    traces.push_back(std::move(trace));
    if (li + 1 < layers_.size()) cur = next_layer_input(stats.latent, embedded);
  }
  return traces;
}

double FFNetwork::goodness_sum(std::span<const double> x) const {
  const auto traces = forward(x);
  double sum = 0.0;
  for (std::size_t li = cfg_.skip_first_layer_goodness ? 1 : 0; li < traces.size(); ++li) {
    sum += traces[li].goodness;
  }
  return sum;
}

std::pair<std::vector<LayerGrad>, double> FFNetwork::local_gradients(
    const TrainBatch& batch) const {
  std::vector<LayerGrad> grads;
  double loss_sum = 0.0;
  const double inv_rows = 1.0 / static_cast<double>(batch.inputs.rows());
  Matrix cur = batch.inputs;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const FFLayer& layer = layers_[li];
    BatchStats stats = forward_layer_batch(layer, cur);
    auto [d, mean_loss] = loss_backward_rows(layer, stats, batch.positive);
    LayerGrad grad;
    grad.dw = matmul_transpose_a(cur, d);
    for (double& v : grad.dw.data()) v *= inv_rows;
    grad.db.assign(layer.width(), 0.0);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const double* drow = d.row(r);
      for (std::size_t j = 0; j < layer.width(); ++j) grad.db[j] += drow[j];
    }
    for (double& v : grad.db) v *= inv_rows;
    grads.push_back(std::move(grad));
    loss_sum += mean_loss;
    if (li + 1 < layers_.size()) {
      normalize_rows(stats.latent, layer);
      cur = next_layer_input(stats.latent, batch.inputs);
    }
  }
  return {std::move(grads), loss_sum / static_cast<double>(layers_.size())};
}

void FFNetwork::apply_gradients(const std::vector<LayerGrad>& grads, double lr) {
  if (grads.size() != layers_.size()) {
    raise(Errc::dimension_mismatch, "apply_gradients: gradient count mismatch");
  }
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    FFLayer& layer = layers_[li];
    adam_apply(layer.adam_w, layer.weights.data(), grads[li].dw.data(), lr);
    adam_apply(layer.adam_b, layer.bias, grads[li].db, lr);
  }
}

namespace {

TrainBatch build_pair_batch(const Dataset& ds, const std::vector<std::size_t>& indices,
                            const LabelCodebook& book, Rng& rng) {
  TrainBatch batch;
  const std::size_t b = indices.size(), dim = ds.images.cols();
  batch.inputs = Matrix(2 * b, dim);
  batch.positive.assign(2 * b, 0);
  for (std::size_t s = 0; s < b; ++s) {
    const std::size_t src = indices[s];
    std::memcpy(batch.inputs.row(s), ds.images.row(src), dim * sizeof(double));
    embed_into(batch.inputs.row_span(s), ds.labels[src], book);
    batch.positive[s] = 1;
  }
  for (std::size_t s = 0; s < b; ++s) {
    const std::size_t src = indices[s];
    const std::vector<int> labels = book.labels();
    std::vector<int> wrong;
    wrong.reserve(labels.size());
    for (int label : labels) {
      if (label != ds.labels[src]) wrong.push_back(label);
    }
    std::memcpy(batch.inputs.row(b + s), ds.images.row(src), dim * sizeof(double));
    embed_into(batch.inputs.row_span(b + s), wrong[rng.uniform_int(wrong.size())], book);
  }
  return batch;
}

TrainBatch build_all_labels_batch(const Dataset& ds, const std::vector<std::size_t>& indices,
                                  const LabelCodebook& book,
                                  std::span<const int> candidate_labels) {
  TrainBatch batch;
  const std::size_t b = indices.size(), dim = ds.images.cols();
  const std::size_t n_labels = candidate_labels.size();
  batch.inputs = Matrix(b * n_labels, dim);
  batch.positive.assign(b * n_labels, 0);
  for (std::size_t s = 0; s < b; ++s) {
    const std::size_t src = indices[s];
    for (std::size_t c = 0; c < n_labels; ++c) {
      const std::size_t row = s * n_labels + c;
      std::memcpy(batch.inputs.row(row), ds.images.row(src), dim * sizeof(double));
      embed_into(batch.inputs.row_span(row), candidate_labels[c], book);
      batch.positive[row] = candidate_labels[c] == ds.labels[src] ? 1 : 0;
    }
  }
  return batch;
}

}  // namespace

TrainLog FFNetwork::train(const Dataset& train_ds, const Dataset& test_ds,
                          const HyperParams& hp, LabelCodebook& book, Rng& rng,
                          TrainMode mode, const EpochCallback& on_epoch) {
  for (int label : train_ds.labels) {
    if (!book.has(label)) {
      raise(Errc::invalid_argument,
            "train: class " + std::to_string(label) + " missing from the codebook");
    }
  }
  if (mode == TrainMode::Pair && book.size() < 2) {
    raise(Errc::invalid_argument, "train: pair mode needs at least 2 registered classes");
  }
  const std::vector<int> candidates = book.labels();
  TrainLog log;
  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    const std::vector<std::size_t> perm = rng.permutation(train_ds.size());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < perm.size(); start += hp.batch_size) {
      const std::size_t end = std::min(start + hp.batch_size, perm.size());
      const std::vector<std::size_t> indices(perm.begin() + start, perm.begin() + end);
      try {
        const TrainBatch batch =
            mode == TrainMode::Pair
                ? build_pair_batch(train_ds, indices, book, rng)
                : build_all_labels_batch(train_ds, indices, book, candidates);
        const double inv_rows = 1.0 / static_cast<double>(batch.inputs.rows());
        Matrix next;
        const Matrix* cur = &batch.inputs;
        double batch_loss = 0.0;
        for (std::size_t li = 0; li < layers_.size(); ++li) {
          FFLayer& layer = layers_[li];
          BatchStats stats = forward_layer_batch(layer, *cur);
          auto [d, mean_loss] = loss_backward_rows(layer, stats, batch.positive);
          batch_loss += mean_loss;
          Matrix dw = matmul_transpose_a(*cur, d);
          for (double& v : dw.data()) v *= inv_rows;
          std::vector<double> db(layer.width(), 0.0);
          for (std::size_t r = 0; r < d.rows(); ++r) {
            const double* drow = d.row(r);
            for (std::size_t j = 0; j < layer.width(); ++j) db[j] += drow[j];
          }
          for (double& v : db) v *= inv_rows;
          adam_apply(layer.adam_w, layer.weights.data(), dw.data(), hp.learning_rate);
          adam_apply(layer.adam_b, layer.bias, db, hp.learning_rate);
          if (li + 1 < layers_.size()) {
            // Refresh the layer output at the updated weights before feeding
            // the next layer.
            BatchStats updated = forward_layer_batch(layer, *cur);
            normalize_rows(updated.latent, layer);
            next = next_layer_input(updated.latent, batch.inputs);
            cur = &next;
          }
        }
        loss_sum += batch_loss / static_cast<double>(layers_.size());
        ++batches;
      } catch (const Error& e) {
        if (e.code() == Errc::numeric_failure) {
          raise(Errc::numeric_failure,
                "train: numeric failure at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(batches) + ": " + e.what());
        }
        throw;
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    stats.test_accuracy = evaluate_accuracy(test_ds, book, candidates);
    log.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  log.low_activity_events = low_activity_events;
  return log;
}

std::vector<int> FFNetwork::predict_batch(const Matrix& images, const LabelCodebook& book,
                                          std::span<const int> labels) const {
  if (labels.empty()) raise(Errc::invalid_argument, "predict: empty candidate label set");
  for (int label : labels) {
    if (!book.has(label)) {
      raise(Errc::invalid_argument,
            "predict: class " + std::to_string(label) + " is not registered");
    }
  }
  const std::size_t n = images.rows();
  std::vector<int> best_label(n, labels[0]);
  std::vector<double> best_good(n, -1.0);
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t rows = std::min(kChunk, n - start);
    Matrix chunk(rows, images.cols());
    for (int label : labels) {
      for (std::size_t r = 0; r < rows; ++r) {
        std::memcpy(chunk.row(r), images.row(start + r), images.cols() * sizeof(double));
        embed_into(chunk.row_span(r), label, book);
      }
      // Forward the chunk, accumulating per-row goodness over layers.
      std::vector<double> total(rows, 0.0);
      Matrix cur = chunk;
      for (std::size_t li = 0; li < layers_.size(); ++li) {
        const FFLayer& layer = layers_[li];
        BatchStats stats = forward_layer_batch(layer, cur);
        if (!(cfg_.skip_first_layer_goodness && li == 0)) {
          for (std::size_t r = 0; r < rows; ++r) {
            total[r] += cfg_.algorithm == Algorithm::Sffa
                            ? stats.prob[r]
                            : stats.pos_sq[r] + stats.neg_sq[r];
          }
        }
        if (li + 1 < layers_.size()) {
          normalize_rows(stats.latent, layer);
          cur = next_layer_input(stats.latent, chunk);
        }
      }
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t row = start + r;
        if (total[r] > best_good[row] ||
            (total[r] == best_good[row] && label < best_label[row])) {
          best_good[row] = total[r];
          best_label[row] = label;
        }
      }
    }
  }
  return best_label;
}

Prediction FFNetwork::predict(std::span<const double> image, const LabelCodebook& book,
                              std::span<const int> labels) const {
  if (labels.empty()) raise(Errc::invalid_argument, "predict: empty candidate label set");
  Prediction pred;
  pred.goodness.reserve(labels.size());
  double best = -1.0;
  for (int label : labels) {
    const std::vector<double> embedded = embed(image, label, book);
    const double g = goodness_sum(embedded);
    pred.goodness.push_back(g);
    if (g > best || (g == best && label < pred.label)) {
      best = g;
      pred.label = label;
    }
  }
  return pred;
}

double FFNetwork::evaluate_accuracy(const Dataset& ds, const LabelCodebook& book,
                                    std::span<const int> labels) const {
  if (ds.size() == 0) return 0.0;
  const std::vector<int> predicted = predict_batch(ds.images, book, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

std::vector<double> FFNetwork::output_sq_norm_gradient(std::span<const double> image,
                                                       const LabelCodebook& book,
                                                       std::span<const int> labels) const {
  if (labels.empty()) raise(Errc::invalid_argument, "output gradient: empty label set");
  const std::size_t n_labels = labels.size();
  Matrix rows(n_labels, image.size());
  for (std::size_t c = 0; c < n_labels; ++c) {
    std::memcpy(rows.row(c), image.data(), image.size() * sizeof(double));
    embed_into(rows.row_span(c), labels[c], book);
  }
  // First pass: per-layer stats and inputs, plus total goodness per label.
  std::vector<Matrix> inputs;
  std::vector<BatchStats> stats;
  std::vector<double> g_total(n_labels, 0.0);
  Matrix cur = rows;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    inputs.push_back(cur);
    stats.push_back(forward_layer_batch(layers_[li], cur));
    const BatchStats& st = stats.back();
    if (!(cfg_.skip_first_layer_goodness && li == 0)) {
      for (std::size_t c = 0; c < n_labels; ++c) {
        g_total[c] += cfg_.algorithm == Algorithm::Sffa
                          ? st.prob[c]
                          : st.pos_sq[c] + st.neg_sq[c];
      }
    }
    if (li + 1 < layers_.size()) {
      Matrix norm = stats.back().latent;
      normalize_rows(norm, layers_[li]);
      cur = next_layer_input(norm, rows);
    }
  }
  // Second pass: d||g||^2/dA rows weighted by 2 g_c, folded into each layer.
  std::vector<double> flat(param_count(), 0.0);
  std::size_t offset = 0;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const FFLayer& layer = layers_[li];
    const std::size_t w = layer.width();
    Matrix d(n_labels, w);
    if (!(cfg_.skip_first_layer_goodness && li == 0)) {
      for (std::size_t c = 0; c < n_labels; ++c) {
        const BatchStats& st = stats[li];
        const double* l = st.loss_view().row(c);
        double* drow = d.row(c);
        double coef_pos, coef_neg;
        if (cfg_.algorithm == Algorithm::Sffa) {
          const double total = st.pos_sq[c] + st.neg_sq[c] + 2.0 * cfg_.epsilon;
          coef_pos = 2.0 * (st.neg_sq[c] + cfg_.epsilon) / (total * total);
          coef_neg = -2.0 * (st.pos_sq[c] + cfg_.epsilon) / (total * total);
        } else {
          coef_pos = coef_neg = 2.0;
        }
        const double weight = 2.0 * g_total[c];
        for (std::size_t j = 0; j < w; ++j) {
          const double coef = j < layer.pos_count ? coef_pos : coef_neg;
          drow[j] = weight * coef * l[j] * masked_fprime(l[j], layer.activation);
        }
      }
    }
    const Matrix dw = matmul_transpose_a(inputs[li], d);
    std::memcpy(flat.data() + offset, dw.data().data(), dw.size() * sizeof(double));
    offset += dw.size();
    for (std::size_t j = 0; j < w; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n_labels; ++c) acc += d(c, j);
      flat[offset + j] = acc;
    }
    offset += w;
  }
  return flat;
}

std::vector<std::span<double>> FFNetwork::param_segments() {
  std::vector<std::span<double>> segs;
  for (FFLayer& layer : layers_) {
    segs.emplace_back(layer.weights.data());
    segs.emplace_back(layer.bias);
  }
  return segs;
}

std::vector<std::span<const double>> FFNetwork::param_segments() const {
  std::vector<std::span<const double>> segs;
  for (const FFLayer& layer : layers_) {
    segs.emplace_back(layer.weights.data());
    segs.emplace_back(layer.bias);
  }
  return segs;
}

std::size_t FFNetwork::param_count() const {
  std::size_t n = 0;
  for (const FFLayer& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

double layer_local_loss(const FFLayer& layer, const NetworkConfig& cfg,
                        std::span<const double> input, bool is_positive) {
  if (input.size() != layer.in_dim()) {
    raise(Errc::dimension_mismatch, "layer loss: input size mismatch");
  }
  const std::size_t w = layer.width();
  std::vector<double> latent(w);
  for (std::size_t j = 0; j < w; ++j) {
    double a = layer.bias[j];
    for (std::size_t i = 0; i < input.size(); ++i) a += input[i] * layer.weights(i, j);
    latent[j] = layer.activation == Activation::ReLU ? std::max(a, 0.0) : logistic(a);
  }
  if (layer.kwta_k > 0 && !cfg.goodness_pre_kwta) kwta_inplace(latent, layer.kwta_k);
  double pos_sq = 0.0, neg_sq = 0.0, l1 = 0.0;
  for (std::size_t j = 0; j < w; ++j) {
    (j < layer.pos_count ? pos_sq : neg_sq) += latent[j] * latent[j];
    l1 += latent[j];
  }
  const double p = cfg.algorithm == Algorithm::Sffa
                       ? sffa_goodness(pos_sq, neg_sq, cfg.epsilon)
                       : logistic(pos_sq + neg_sq - cfg.theta);
  return row_loss_terms(cfg.algorithm, cfg, pos_sq, neg_sq, p, l1, is_positive).loss;
}

LayerGrad layer_gradient(const FFLayer& layer, const NetworkConfig& cfg,
                         std::span<const double> input, bool is_positive) {
  if (input.size() != layer.in_dim()) {
    raise(Errc::dimension_mismatch, "layer gradient: input size mismatch");
  }
  const std::size_t w = layer.width();
  std::vector<double> latent(w);
  for (std::size_t j = 0; j < w; ++j) {
    double a = layer.bias[j];
    for (std::size_t i = 0; i < input.size(); ++i) a += input[i] * layer.weights(i, j);
    latent[j] = layer.activation == Activation::ReLU ? std::max(a, 0.0) : logistic(a);
  }
  if (layer.kwta_k > 0 && !cfg.goodness_pre_kwta) kwta_inplace(latent, layer.kwta_k);
  double pos_sq = 0.0, neg_sq = 0.0, l1 = 0.0;
  for (std::size_t j = 0; j < w; ++j) {
    (j < layer.pos_count ? pos_sq : neg_sq) += latent[j] * latent[j];
    l1 += latent[j];
  }
  const double p = cfg.algorithm == Algorithm::Sffa
                       ? sffa_goodness(pos_sq, neg_sq, cfg.epsilon)
                       : logistic(pos_sq + neg_sq - cfg.theta);
  const RowLossTerms t =
      row_loss_terms(cfg.algorithm, cfg, pos_sq, neg_sq, p, l1, is_positive);
  LayerGrad grad;
  grad.dw = Matrix(layer.in_dim(), w);
  grad.db.assign(w, 0.0);
  for (std::size_t j = 0; j < w; ++j) {
    const double coef = j < layer.pos_count ? t.coef_pos : t.coef_neg;
    const double da = (coef * latent[j] + t.coef_reg) * masked_fprime(latent[j], layer.activation);
    grad.db[j] = da;
    if (da == 0.0) continue;
    for (std::size_t i = 0; i < input.size(); ++i) grad.dw(i, j) = da * input[i];
  }
  return grad;
}

LatentPair sgd_single_step_activity(FFLayer& layer, std::span<const double> x, double lr) {
  if (layer.activation != Activation::ReLU) {
    raise(Errc::invalid_argument, "single-step activity: ReLU layer required");
  }
  for (double b : layer.bias) {
    if (b != 0.0) raise(Errc::invalid_argument, "single-step activity: bias must be zero");
  }
  if (layer.kwta_k != 0) {
    raise(Errc::invalid_argument, "single-step activity: k-WTA must be disabled");
  }
  if (layer.pos_count == 0 || layer.pos_count >= layer.width()) {
    raise(Errc::invalid_argument, "single-step activity: split layer required");
  }
  if (std::fabs(std::sqrt(sq_norm(x)) - 1.0) > 1e-9) {
    raise(Errc::invalid_argument, "single-step activity: input must have unit norm");
  }
  const std::size_t w = layer.width();
  auto forward_once = [&](std::vector<double>& latent) {
    latent.resize(w);
    for (std::size_t j = 0; j < w; ++j) {
      double a = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) a += x[i] * layer.weights(i, j);
      latent[j] = std::max(a, 0.0);
    }
  };
  std::vector<double> latent;
  forward_once(latent);
  double e = 0.0, i_act = 0.0;
  for (std::size_t j = 0; j < w; ++j) {
    (j < layer.pos_count ? e : i_act) += latent[j] * latent[j];
  }
  if (e <= 0.0) {
    raise(Errc::numeric_failure, "single-step activity: zero positive-set activity");
  }
  if (i_act <= 0.0) {
    raise(Errc::numeric_failure, "single-step activity: zero negative-set activity");
  }
  const double s = 1.0 / (e + i_act);
  const double r = i_act / e;
  if (2.0 * lr * s >= 1.0) {
    raise(Errc::unstable_step, "single-step activity: 2*lr*S = " +
                                   std::to_string(2.0 * lr * s) + " >= 1");
  }
  for (std::size_t j = 0; j < w; ++j) {
    if (latent[j] <= 0.0) continue;
    const double dloss_da =
        j < layer.pos_count ? -r * s * 2.0 * latent[j] : s * 2.0 * latent[j];
    for (std::size_t i = 0; i < x.size(); ++i) {
      layer.weights(i, j) -= lr * dloss_da * x[i];
    }
  }
  forward_once(latent);
  LatentPair out;
  out.pos.assign(latent.begin(), latent.begin() + layer.pos_count);
  out.neg.assign(latent.begin() + layer.pos_count, latent.end());
  return out;
}

}  // namespace ff
