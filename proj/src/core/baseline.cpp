#include "core/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "core/error.hpp"

namespace ff {

Mlp::Mlp(std::size_t input_dim, std::vector<std::size_t> hidden_widths, Rng& init_rng)
    : input_dim_(input_dim) {
  std::size_t in_dim = input_dim;
  for (std::size_t width : hidden_widths) {
    if (width == 0) raise(Errc::invalid_argument, "mlp: zero-width hidden layer");
    Dense layer;
    layer.w = Matrix(in_dim, width);
    // He initialization for the ReLU stack.
    const double scale = std::sqrt(2.0 / static_cast<double>(in_dim));
    for (double& w : layer.w.data()) w = init_rng.normal() * scale;
    layer.b.assign(width, 0.0);
    layer.adam_w.resize(layer.w.size());
    layer.adam_b.resize(width);
    hidden_.push_back(std::move(layer));
    in_dim = width;
  }
}

std::size_t Mlp::head_classes(std::size_t head) const {
  if (head >= heads_.size()) {
    raise(Errc::invalid_argument, "mlp: unknown head " + std::to_string(head));
  }
  return heads_[head].w.rows();
}

std::size_t Mlp::add_head(std::size_t classes, Rng& init_rng) {
  if (classes == 0) raise(Errc::invalid_argument, "mlp: head needs at least one class");
  const std::size_t in_dim = hidden_.empty() ? input_dim_ : hidden_.back().w.cols();
  Dense head;
  head.w = Matrix(classes, in_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& w : head.w.data()) w = init_rng.normal() * scale;
  head.b.assign(classes, 0.0);
  head.adam_w.resize(head.w.size());
  head.adam_b.resize(classes);
  heads_.push_back(std::move(head));
  return heads_.size() - 1;
}

void Mlp::grow_head(std::size_t head, std::size_t extra) {
  if (head >= heads_.size()) {
    raise(Errc::invalid_argument, "mlp: unknown head " + std::to_string(head));
  }
  if (extra == 0) return;
  Dense& h = heads_[head];
  const std::size_t in_dim = h.w.cols();
  Matrix grown(h.w.rows() + extra, in_dim);
  std::memcpy(grown.data().data(), h.w.data().data(), h.w.size() * sizeof(double));
  h.w = std::move(grown);
  h.b.resize(h.b.size() + extra, 0.0);
  h.adam_w.resize(h.w.size());
  h.adam_b.resize(h.b.size());
}

Matrix Mlp::hidden_forward(const Matrix& x, std::vector<Matrix>* activations) const {
  Matrix cur = x;
  for (const Dense& layer : hidden_) {
    Matrix z = matmul(cur, layer.w);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      double* row = z.row(r);
      for (std::size_t j = 0; j < z.cols(); ++j) {
        row[j] += layer.b[j];
        if (row[j] < 0.0) row[j] = 0.0;
      }
    }
    if (activations) activations->push_back(z);
    cur = std::move(z);
  }
  return cur;
}

std::vector<double> Mlp::forward_logits(std::span<const double> x, std::size_t head) const {
  if (head >= heads_.size()) {
    raise(Errc::invalid_argument, "mlp: unknown head " + std::to_string(head));
  }
  if (x.size() != input_dim_) {
    raise(Errc::dimension_mismatch, "mlp: input of " + std::to_string(x.size()) +
                                        " does not match " + std::to_string(input_dim_));
  }
  Matrix row(1, x.size());
  std::memcpy(row.row(0), x.data(), x.size() * sizeof(double));
  const Matrix h = hidden_forward(row, nullptr);
  const Dense& hd = heads_[head];
  std::vector<double> logits(hd.w.rows());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    logits[c] = hd.b[c] + dot(hd.w.row_span(c), h.row_span(0));
  }
  return logits;
}

std::vector<double> Mlp::softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

Mlp::Grads Mlp::gradients(const Matrix& x, std::span<const int> targets,
                          std::span<const std::size_t> row_head) const {
  const std::size_t rows = x.rows();
  if (targets.size() != rows) {
    raise(Errc::dimension_mismatch, "mlp gradients: target count mismatch");
  }
  if (row_head.size() != rows && row_head.size() != 1) {
    raise(Errc::dimension_mismatch, "mlp gradients: row_head count mismatch");
  }
  auto head_of = [&](std::size_t r) { return row_head.size() == 1 ? row_head[0] : row_head[r]; };
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t h = head_of(r);
    if (h >= heads_.size()) {
      raise(Errc::invalid_argument, "mlp gradients: unknown head " + std::to_string(h));
    }
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= heads_[h].w.rows()) {
      raise(Errc::invalid_argument, "mlp gradients: target " + std::to_string(targets[r]) +
                                        " outside head of " +
                                        std::to_string(heads_[h].w.rows()));
    }
  }

  Grads grads;
  grads.hidden.resize(hidden_.size());
  for (std::size_t li = 0; li < hidden_.size(); ++li) {
    grads.hidden[li].dw = Matrix(hidden_[li].w.rows(), hidden_[li].w.cols());
    grads.hidden[li].db.assign(hidden_[li].w.cols(), 0.0);
  }
  grads.heads.resize(heads_.size());
  for (std::size_t hi = 0; hi < heads_.size(); ++hi) {
    grads.heads[hi].dw = Matrix(heads_[hi].w.rows(), heads_[hi].w.cols());
    grads.heads[hi].db.assign(heads_[hi].w.rows(), 0.0);
  }

  std::vector<Matrix> activations;
  activations.reserve(hidden_.size());
  const Matrix h_last = hidden_forward(x, &activations);
  const double inv_rows = 1.0 / static_cast<double>(rows);

  // dLoss/d(hidden output), accumulated across heads row by row.
  Matrix dh(h_last.rows(), h_last.cols());
  double loss_sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t hi = head_of(r);
    const Dense& hd = heads_[hi];
    std::vector<double> logits(hd.w.rows());
    for (std::size_t c = 0; c < logits.size(); ++c) {
      logits[c] = hd.b[c] + dot(hd.w.row_span(c), h_last.row_span(r));
    }
    std::vector<double> probs = softmax(logits);
    loss_sum += -std::log(std::max(probs[targets[r]], 1e-300));
    // dlogits = probs - onehot; fold the 1/B into it here.
    for (std::size_t c = 0; c < probs.size(); ++c) {
      const double dlogit =
          (probs[c] - (static_cast<int>(c) == targets[r] ? 1.0 : 0.0)) * inv_rows;
      grads.heads[hi].db[c] += dlogit;
      double* dwrow = grads.heads[hi].dw.row(c);
      const double* hrow = h_last.row(r);
      for (std::size_t j = 0; j < h_last.cols(); ++j) dwrow[j] += dlogit * hrow[j];
      const double* wrow = hd.w.row(c);
      double* dhrow = dh.row(r);
      for (std::size_t j = 0; j < h_last.cols(); ++j) dhrow[j] += dlogit * wrow[j];
    }
  }
  grads.mean_loss = loss_sum * inv_rows;

  // Back through the ReLU stack; gradients carry the 1/B factor already.
  Matrix delta = std::move(dh);
  for (std::size_t li = hidden_.size(); li-- > 0;) {
    const Matrix& act = activations[li];
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      double* drow = delta.row(r);
      const double* arow = act.row(r);
      for (std::size_t j = 0; j < delta.cols(); ++j) {
        if (arow[j] <= 0.0) drow[j] = 0.0;
      }
    }
    const Matrix& below = li == 0 ? x : activations[li - 1];
    grads.hidden[li].dw = matmul_transpose_a(below, delta);
    for (std::size_t j = 0; j < delta.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < delta.rows(); ++r) acc += delta(r, j);
      grads.hidden[li].db[j] = acc;
    }
    if (li > 0) delta = matmul_transpose_b(delta, hidden_[li].w);
  }
  return grads;
}

Mlp::Grads Mlp::backward(std::span<const double> x, int target, std::size_t head) const {
  Matrix row(1, x.size());
  std::memcpy(row.row(0), x.data(), x.size() * sizeof(double));
  const int targets[] = {target};
  const std::size_t heads[] = {head};
  return gradients(row, targets, heads);
}

void Mlp::apply_gradients(const Grads& grads, double lr) {
  if (grads.hidden.size() != hidden_.size() || grads.heads.size() != heads_.size()) {
    raise(Errc::dimension_mismatch, "mlp apply: gradient layout mismatch");
  }
  for (std::size_t li = 0; li < hidden_.size(); ++li) {
    adam_apply(hidden_[li].adam_w, hidden_[li].w.data(), grads.hidden[li].dw.data(), lr);
    adam_apply(hidden_[li].adam_b, hidden_[li].b, grads.hidden[li].db, lr);
  }
  for (std::size_t hi = 0; hi < heads_.size(); ++hi) {
    adam_apply(heads_[hi].adam_w, heads_[hi].w.data(), grads.heads[hi].dw.data(), lr);
    adam_apply(heads_[hi].adam_b, heads_[hi].b, grads.heads[hi].db, lr);
  }
}

TrainLog Mlp::train(const Dataset& train_ds, const Dataset& test_ds, const HyperParams& hp,
                    Rng& rng, std::size_t head, const EpochCallback& on_epoch) {
  if (head >= heads_.size()) {
    raise(Errc::invalid_argument, "mlp train: unknown head " + std::to_string(head));
  }
  for (int label : train_ds.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= heads_[head].w.rows()) {
      raise(Errc::invalid_argument,
            "mlp train: label " + std::to_string(label) + " outside head width " +
                std::to_string(heads_[head].w.rows()));
    }
  }
  TrainLog log;
  const std::size_t head_ids[] = {head};
  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    const std::vector<std::size_t> perm = rng.permutation(train_ds.size());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < perm.size(); start += hp.batch_size) {
      const std::size_t end = std::min(start + hp.batch_size, perm.size());
      Matrix x(end - start, train_ds.images.cols());
      std::vector<int> targets(end - start);
      for (std::size_t i = start; i < end; ++i) {
        std::memcpy(x.row(i - start), train_ds.images.row(perm[i]),
                    x.cols() * sizeof(double));
        targets[i - start] = train_ds.labels[perm[i]];
      }
      const Grads grads = gradients(x, targets, head_ids);
      apply_gradients(grads, hp.learning_rate);
      loss_sum += grads.mean_loss;
      ++batches;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    stats.test_accuracy = evaluate_accuracy(test_ds, head);
    log.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return log;
}

std::vector<int> Mlp::predict_batch(const Matrix& images, std::size_t head) const {
  if (head >= heads_.size()) {
    raise(Errc::invalid_argument, "mlp predict: unknown head " + std::to_string(head));
  }
  const Dense& hd = heads_[head];
  const Matrix h = hidden_forward(images, nullptr);
  const Matrix logits = matmul_transpose_b(h, hd.w);
  std::vector<int> out(images.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double* row = logits.row(r);
    int best = 0;
    double best_v = row[0] + hd.b[0];
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      const double v = row[c] + hd.b[c];
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(c);
      }
    }
    out[r] = best;
  }
  return out;
}

double Mlp::evaluate_accuracy(const Dataset& ds, std::size_t head) const {
  if (ds.size() == 0) return 0.0;
  const std::vector<int> predicted = predict_batch(ds.images, head);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

std::vector<double> Mlp::output_sq_norm_gradient(std::span<const double> x,
                                                 std::size_t head) const {
  if (head >= heads_.size()) {
    raise(Errc::invalid_argument, "mlp: unknown head " + std::to_string(head));
  }
  Matrix row(1, x.size());
  std::memcpy(row.row(0), x.data(), x.size() * sizeof(double));
  std::vector<Matrix> activations;
  const Matrix h_last = hidden_forward(row, &activations);
  const Dense& hd = heads_[head];
  std::vector<double> logits(hd.w.rows());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    logits[c] = hd.b[c] + dot(hd.w.row_span(c), h_last.row_span(0));
  }

  std::vector<double> flat(param_count(), 0.0);
  // Segment offsets: hidden pairs first, then head pairs.
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Dense& layer : hidden_) {
    offsets.push_back(off);
    off += layer.w.size() + layer.b.size();
  }
  std::vector<std::size_t> head_offsets;
  for (const Dense& h : heads_) {
    head_offsets.push_back(off);
    off += h.w.size() + h.b.size();
  }

  // d||logits||^2 / dlogit_c = 2 * logit_c, then the usual reverse pass.
  Matrix dh(1, h_last.cols());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const double dlogit = 2.0 * logits[c];
    double* dw = flat.data() + head_offsets[head] + c * hd.w.cols();
    const double* hrow = h_last.row(0);
    for (std::size_t j = 0; j < hd.w.cols(); ++j) dw[j] = dlogit * hrow[j];
    flat[head_offsets[head] + hd.w.size() + c] = dlogit;
    const double* wrow = hd.w.row(c);
    for (std::size_t j = 0; j < hd.w.cols(); ++j) dh(0, j) += dlogit * wrow[j];
  }
  Matrix delta = std::move(dh);
  for (std::size_t li = hidden_.size(); li-- > 0;) {
    const Matrix& act = activations[li];
    for (std::size_t j = 0; j < delta.cols(); ++j) {
      if (act(0, j) <= 0.0) delta(0, j) = 0.0;
    }
    const Matrix& below = li == 0 ? row : activations[li - 1];
    double* dw = flat.data() + offsets[li];
    for (std::size_t i = 0; i < below.cols(); ++i) {
      const double xv = below(0, i);
      for (std::size_t j = 0; j < delta.cols(); ++j) {
        dw[i * delta.cols() + j] = xv * delta(0, j);
      }
    }
    double* db = flat.data() + offsets[li] + hidden_[li].w.size();
    for (std::size_t j = 0; j < delta.cols(); ++j) db[j] = delta(0, j);
    if (li > 0) delta = matmul_transpose_b(delta, hidden_[li].w);
  }
  return flat;
}

std::vector<std::span<double>> Mlp::param_segments() {
  std::vector<std::span<double>> segs;
  for (Dense& layer : hidden_) {
    segs.emplace_back(layer.w.data());
    segs.emplace_back(layer.b);
  }
  for (Dense& head : heads_) {
    segs.emplace_back(head.w.data());
    segs.emplace_back(head.b);
  }
  return segs;
}

std::vector<std::span<const double>> Mlp::param_segments() const {
  std::vector<std::span<const double>> segs;
  for (const Dense& layer : hidden_) {
    segs.emplace_back(layer.w.data());
    segs.emplace_back(layer.b);
  }
  for (const Dense& head : heads_) {
    segs.emplace_back(head.w.data());
    segs.emplace_back(head.b);
  }
  return segs;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const Dense& layer : hidden_) n += layer.w.size() + layer.b.size();
  for (const Dense& head : heads_) n += head.w.size() + head.b.size();
  return n;
}

}  // namespace ff
