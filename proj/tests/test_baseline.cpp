#include <cmath>

#include "core/baseline.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace ff;

namespace {

double ce_loss(const Mlp& mlp, std::span<const double> x, int target, std::size_t head) {
  const std::vector<double> probs = Mlp::softmax(mlp.forward_logits(x, head));
  return -std::log(probs[target]);
}

Dataset tiny_dataset(int classes, int per_class, Rng& rng, std::size_t pixels = 32) {
  Dataset ds;
  ds.num_classes = classes;
  ds.images = Matrix(static_cast<std::size_t>(classes) * per_class, pixels);
  for (double& v : ds.images.data()) v = rng.uniform();
  for (int c = 0; c < classes; ++c) {
    for (int k = 0; k < per_class; ++k) ds.labels.push_back(c);
  }
  return ds;
}

}  // namespace

TEST_CASE("headless trunk with identity head reproduces the input") {
  Rng rng(301);
  Mlp mlp(2, {}, rng);
  mlp.add_head(2, rng);
  mlp.heads()[0].w.fill(0.0);
  mlp.heads()[0].w(0, 0) = 1.0;
  mlp.heads()[0].w(1, 1) = 1.0;
  mlp.heads()[0].b.assign(2, 0.0);
  const std::vector<double> x{0.3, -0.7};
  const std::vector<double> logits = mlp.forward_logits(x, 0);
  CHECK(logits[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(logits[1] == doctest::Approx(-0.7).epsilon(1e-15));
}

TEST_CASE("forward matches a scalar-loop oracle on a random two-layer net") {
  Rng rng(303);
  Mlp mlp(6, {5, 4}, rng);
  mlp.add_head(3, rng);
  const std::vector<double> x = rng.normal_vec(6);

  // Oracle.
  std::vector<double> h = x;
  for (const Mlp::Dense& layer : mlp.hidden()) {
    std::vector<double> next(layer.w.cols());
    for (std::size_t j = 0; j < next.size(); ++j) {
      double a = layer.b[j];
      for (std::size_t i = 0; i < h.size(); ++i) a += h[i] * layer.w(i, j);
      next[j] = std::max(a, 0.0);
    }
    h = next;
  }
  std::vector<double> want(3);
  for (std::size_t c = 0; c < 3; ++c) {
    double a = mlp.heads()[0].b[c];
    for (std::size_t i = 0; i < h.size(); ++i) a += h[i] * mlp.heads()[0].w(c, i);
    want[c] = a;
  }

  const std::vector<double> got = mlp.forward_logits(x, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-12));
  }
}

TEST_CASE("softmax sums to one") {
  Rng rng(305);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> logits = rng.normal_vec(7);
    const std::vector<double> probs = Mlp::softmax(logits);
    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK(std::fabs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(307);
  std::size_t checked = 0;
  for (int rep = 0; rep < 55; ++rep) {
    Mlp mlp(5, {6, 4}, rng);
    mlp.add_head(3, rng);
    const std::vector<double> x = rng.normal_vec(5);
    const int target = static_cast<int>(rng.uniform_int(3));
    const Mlp::Grads grads = mlp.backward(x, target, 0);

    const double h = 1e-5;
    auto segments = mlp.param_segments();
    // Analytic grads flattened in the same order.
    std::vector<double> flat;
    for (const LayerGrad& g : grads.hidden) {
      flat.insert(flat.end(), g.dw.data().begin(), g.dw.data().end());
      flat.insert(flat.end(), g.db.begin(), g.db.end());
    }
    for (const LayerGrad& g : grads.heads) {
      flat.insert(flat.end(), g.dw.data().begin(), g.dw.data().end());
      flat.insert(flat.end(), g.db.begin(), g.db.end());
    }
    double max_grad = 0.0;
    for (double v : flat) max_grad = std::max(max_grad, std::fabs(v));

    std::size_t offset = 0;
    for (auto seg : segments) {
      // Probe a stride of parameters per segment; full FD would be slow.
      for (std::size_t k = 0; k < seg.size(); k += 3) {
        const double saved = seg[k];
        seg[k] = saved + h;
        const double up = ce_loss(mlp, x, target, 0);
        seg[k] = saved - h;
        const double down = ce_loss(mlp, x, target, 0);
        seg[k] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = flat[offset + k];
        const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-6 * max_grad, 1e-12});
        CHECK(std::fabs(a - fd) / denom < 1e-4);
        ++checked;
      }
      offset += seg.size();
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("saturated correct class gives a near-zero head gradient") {
  Rng rng(309);
  Mlp mlp(3, {}, rng);
  mlp.add_head(2, rng);
  mlp.heads()[0].w.fill(0.0);
  mlp.heads()[0].b = {30.0, -30.0};  // class 0 all but certain
  const std::vector<double> x{0.1, 0.2, 0.3};
  const Mlp::Grads grads = mlp.backward(x, 0, 0);
  for (double v : grads.heads[0].dw.data()) CHECK(std::fabs(v) < 1e-10);
  for (double v : grads.heads[0].db) CHECK(std::fabs(v) < 1e-10);
}

TEST_CASE("gradient of an unused head is zero") {
  Rng rng(311);
  Mlp mlp(4, {5}, rng);
  mlp.add_head(2, rng);
  mlp.add_head(3, rng);
  const std::vector<double> x = rng.normal_vec(4);
  const Mlp::Grads grads = mlp.backward(x, 1, 0);
  for (double v : grads.heads[1].dw.data()) CHECK(v == 0.0);
  for (double v : grads.heads[1].db) CHECK(v == 0.0);
}

TEST_CASE("training a head leaves other heads untouched") {
  Rng rng(313);
  Mlp mlp(8, {6}, rng);
  mlp.add_head(2, rng);
  mlp.add_head(2, rng);
  const std::vector<double> head1_before = mlp.heads()[1].w.data();
  Rng data_rng(314);
  Dataset ds = tiny_dataset(2, 6, data_rng, 8);
  HyperParams hp;
  hp.epochs = 2;
  hp.batch_size = 4;
  hp.learning_rate = 1e-3;
  Rng train_rng(315);
  mlp.train(ds, ds, hp, train_rng, 0);
  CHECK(mlp.heads()[1].w.data() == head1_before);
}

TEST_CASE("zero epochs leave the mlp unchanged; training is deterministic") {
  Rng data_rng(317);
  Dataset ds = tiny_dataset(3, 6, data_rng, 16);
  auto run = [&](std::size_t epochs) {
    Rng rng(318);
    Mlp mlp(16, {8}, rng);
    mlp.add_head(3, rng);
    HyperParams hp;
    hp.epochs = epochs;
    hp.batch_size = 6;
    hp.learning_rate = 1e-3;
    Rng train_rng(319);
    mlp.train(ds, ds, hp, train_rng, 0);
    return mlp.hidden()[0].w.data();
  };
  CHECK(run(0) == [&] {
    Rng rng(318);
    Mlp mlp(16, {8}, rng);
    mlp.add_head(3, rng);
    return mlp.hidden()[0].w.data();
  }());
  CHECK(run(3) == run(3));
}

TEST_CASE("mlp learns a linearly separable toy problem") {
  // Class = which half of the input carries the mass.
  Rng rng(321);
  Dataset ds;
  ds.num_classes = 2;
  ds.images = Matrix(80, 16);
  for (std::size_t r = 0; r < 80; ++r) {
    const int c = static_cast<int>(r % 2);
    ds.labels.push_back(c);
    for (std::size_t j = 0; j < 16; ++j) {
      const bool hot = c == 0 ? j < 8 : j >= 8;
      ds.images(r, j) = hot ? 0.5 + 0.5 * rng.uniform() : 0.1 * rng.uniform();
    }
  }
  Rng init(322);
  Mlp mlp(16, {12}, init);
  mlp.add_head(2, init);
  HyperParams hp;
  hp.epochs = 30;
  hp.batch_size = 16;
  hp.learning_rate = 0.01;
  Rng train_rng(323);
  const TrainLog log = mlp.train(ds, ds, hp, train_rng, 0);
  CHECK(log.max_test_accuracy() >= 0.95);
}

TEST_CASE("grow_head appends zero rows and keeps old logits") {
  Rng rng(325);
  Mlp mlp(4, {}, rng);
  mlp.add_head(2, rng);
  const std::vector<double> x{0.2, 0.4, 0.6, 0.8};
  const std::vector<double> before = mlp.forward_logits(x, 0);
  mlp.grow_head(0, 2);
  const std::vector<double> after = mlp.forward_logits(x, 0);
  REQUIRE(after.size() == 4);
  CHECK(after[0] == before[0]);
  CHECK(after[1] == before[1]);
  CHECK(after[2] == 0.0);
  CHECK(after[3] == 0.0);
}

TEST_CASE("train rejects labels outside the head") {
  Rng rng(327);
  Mlp mlp(8, {4}, rng);
  mlp.add_head(2, rng);
  Rng data_rng(328);
  Dataset ds = tiny_dataset(3, 2, data_rng, 8);
  HyperParams hp;
  Rng train_rng(329);
  CHECK_THROWS_AS(mlp.train(ds, ds, hp, train_rng, 0), Error);
}
