// Copyright 2026 The gwsdr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gwsdr/classifier.hpp"
#include "gwsdr/error.hpp"
#include "test_support.hpp"

using namespace gwsdr;

namespace {

ClassifierModel zero_model(const std::vector<std::size_t>& sizes) {
  auto m = init_model(sizes, 1);
  m.assign(std::vector<double>(m.parameter_count(), 0.0));
  return m;
}

// Independent silhouette: plain loops over all pairs.
double silhouette_oracle(const std::vector<Embedding>& e) {
  std::size_t classes = 0;
  for (const auto& x : e) classes = std::max(classes, x.label + 1);
  double total = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    std::vector<double> sum(classes, 0.0);
    std::vector<std::size_t> n(classes, 0);
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (i == j) continue;
      double d = 0;
      for (std::size_t t = 0; t < e[i].vector.size(); ++t)
        d += (e[i].vector[t] - e[j].vector[t]) * (e[i].vector[t] - e[j].vector[t]);
      sum[e[j].label] += std::sqrt(d);
      ++n[e[j].label];
    }
    const double a = sum[e[i].label] / static_cast<double>(n[e[i].label]);
    double b = INFINITY;
    for (std::size_t c = 0; c < classes; ++c)
      if (c != e[i].label && n[c]) b = std::min(b, sum[c] / static_cast<double>(n[c]));
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(e.size());
}

}  // namespace

TEST_CASE("init_model shapes, zero biases and determinism") {
  const auto a = init_model({4, 8, 3}, 9);
  const auto b = init_model({4, 8, 3}, 9);
  CHECK(a == b);
  CHECK(a.layers[0].weights.rows() == 8);
  CHECK(a.layers[0].weights.cols() == 4);
  CHECK(a.layers[1].weights.rows() == 3);
  CHECK(a.layers[1].weights.cols() == 8);
  for (const auto& l : a.layers) CHECK(l.bias.isZero());
  CHECK(a.parameter_count() == 8 * 4 + 8 + 3 * 8 + 3);
  CHECK_FALSE(init_model({4, 8, 3}, 10) == a);
  CHECK_THROWS_AS(init_model({4}, 1), Error);
  CHECK_THROWS_AS(init_model({4, 0, 3}, 1), Error);
}

TEST_CASE("flatten order is weights row-major then bias, layer by layer") {
  auto m = init_model({2, 2, 1}, 3);
  std::vector<double> p(m.parameter_count());
  std::iota(p.begin(), p.end(), 1.0);
  m.assign(p);
  CHECK(m.layers[0].weights(0, 1) == 2.0);
  CHECK(m.layers[0].weights(1, 0) == 3.0);
  CHECK(m.layers[0].bias(1) == 6.0);
  CHECK(m.layers[1].weights(0, 1) == 8.0);
  CHECK(m.layers[1].bias(0) == 9.0);
  CHECK(m.flatten() == p);
}

TEST_CASE("forward yields a probability vector and the penultimate embedding") {
  const auto m = init_model({3, 5, 4}, 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x = {n(rng), n(rng), n(rng)};
    const auto f = forward(m, x);
    CHECK(std::abs(f.probs.sum() - 1.0) < 1e-9);
    CHECK(f.probs.minCoeff() >= 0.0);
    CHECK(f.embedding.size() == 5);
  }
  CHECK_THROWS_AS(forward(m, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("zero model predicts uniformly") {
  const auto m = zero_model({3, 4, 5});
  const auto p = predict_probs(m, std::vector<double>{1, -2, 3});
  for (double v : p) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("probabilities are invariant to a constant output-bias shift") {
  const auto m = init_model({3, 6, 4}, 8);
  auto shifted = m;
  shifted.layers.back().bias.array() += 7.5;
  const std::vector<double> x = {0.3, -1.2, 2.0};
  const auto a = predict_probs(m, x);
  const auto b = predict_probs(shifted, x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("training separates two blobs and lowers the loss") {
  const auto data = testing::two_blobs(40, 3, 4.0, 5);
  TrainConfig cfg;
  cfg.seed = 3;
  const auto res = train(init_model({3, 8, 2}, 4), data, cfg);
  CHECK(evaluate(res.model, data).accuracy >= 0.99);
  REQUIRE(res.epochs.size() == cfg.epochs);
  CHECK(res.epochs.back().total_loss < res.epochs.front().total_loss);
}

TEST_CASE("training is bit-determined by its inputs") {
  const auto data = testing::two_blobs(20, 2, 3.0, 6);
  TrainConfig cfg;
  cfg.seed = 12;
  cfg.epochs = 10;
  const auto init = init_model({2, 4, 2}, 1);
  CHECK(train(init, data, cfg).model == train(init, data, cfg).model);
  auto other = cfg;
  other.seed = 13;
  CHECK_FALSE(train(init, data, other).model == train(init, data, cfg).model);
}

TEST_CASE("a zero DR weight leaves training identical to plain CE training") {
  const auto data = testing::two_blobs(20, 2, 3.0, 7);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.seed = 2;
  const auto init = init_model({2, 4, 2}, 5);
  const auto other = init_model({2, 4, 2}, 6);
  cfg.dr_weight = 0.0;
  const auto plain = train(init, data, cfg);
  const auto with_ref = train(init, data, cfg, &other);
  CHECK(plain.model == with_ref.model);
  CHECK(with_ref.initial_dr_loss == 0.0);
  for (const auto& e : with_ref.epochs) CHECK(e.dr_loss == 0.0);
}

TEST_CASE("DR against the starting point starts at zero") {
  const auto data = testing::two_blobs(10, 2, 3.0, 8);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.dr_weight = 1.0;
  cfg.dr_rank = 1;
  const auto init = init_model({2, 4, 2}, 5);
  const auto res = train(init, data, cfg, &init);
  CHECK(res.initial_dr_loss < 1e-12);
  REQUIRE(res.epochs.size() == 2);
  CHECK(res.epochs.front().spectrum.size() == 2);
  CHECK(res.epochs.front().min_eigengap > 0.0);
}

TEST_CASE("train validates its configuration") {
  const auto data = testing::two_blobs(5, 2, 3.0, 9);
  TrainConfig cfg;
  cfg.dr_weight = 1.0;
  CHECK_THROWS_AS(train(init_model({2, 3, 2}, 1), data, cfg), Error);  // no reference
  const auto ref = init_model({2, 4, 2}, 1);
  try {
    train(init_model({2, 3, 2}, 1), data, cfg, &ref);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
  cfg = {};
  try {
    train(init_model({3, 3, 2}, 1), data, cfg);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(init_model({2, 3, 2}, 1), data, cfg), Error);
}

TEST_CASE("cross-entropy gradient matches central differences") {
  LabeledDataset data;
  data.class_names = {"a", "b", "c"};
  data.feature_dim = 4;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < 12; ++i) {
    Sample s;
    s.label = i % 3;
    for (int j = 0; j < 4; ++j) s.values.push_back(n(rng));
    data.samples.push_back(s);
  }
  for (const auto& sizes : {std::vector<std::size_t>{4, 8, 3}, {4, 6, 5, 3}}) {
    auto m = init_model(sizes, 17);
    auto p = m.flatten();
    for (auto& v : p) v += 0.1 * n(rng);
    m.assign(p);
    REQUIRE(m.parameter_count() <= 200);
    const auto g = cross_entropy_gradient(m, data);
    double worst = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto up = p, down = p;
      up[i] += 1e-5;
      down[i] -= 1e-5;
      auto mu = m, md = m;
      mu.assign(up);
      md.assign(down);
      const double fd = (cross_entropy(mu, data) - cross_entropy(md, data)) / 2e-5;
      worst = std::max(worst, std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-6}));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("evaluate counts predictions with the lowest-index tie-break") {
  const auto data = testing::two_blobs(15, 3, 6.0, 10);
  TrainConfig cfg;
  cfg.seed = 1;
  const auto model = train(init_model({3, 6, 2}, 2), data, cfg).model;
  const auto ev = evaluate(model, data);
  CHECK(ev.accuracy == 1.0);
  CHECK(ev.confusion[0][1] == 0);
  CHECK(ev.confusion[1][0] == 0);

  const auto zero = zero_model({3, 4, 2});
  const auto ez = evaluate(zero, data);
  CHECK(ez.accuracy == doctest::Approx(0.5));
  CHECK(ez.confusion[1][0] == 15);
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(std::accumulate(ez.confusion[c].begin(), ez.confusion[c].end(), std::size_t{0}) ==
          counts[c]);
}

TEST_CASE("embeddings follow sample order and vary on trained models") {
  const auto data = testing::two_blobs(10, 2, 4.0, 11);
  TrainConfig cfg;
  const auto model = train(init_model({2, 5, 2}, 3), data, cfg).model;
  const auto e1 = embed_dataset(model, data);
  const auto e2 = embed_dataset(model, data);
  REQUIRE(e1.size() == data.samples.size());
  bool varies = false;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    CHECK(e1[i].label == data.samples[i].label);
    CHECK(e1[i].vector == e2[i].vector);
    varies = varies || e1[i].vector != e1[0].vector;
  }
  CHECK(varies);
  CHECK(separability_score(e1) > 0.0);
}

TEST_CASE("separability score extremes and oracle agreement") {
  std::vector<Embedding> two = {{{0, 0}, 0}, {{0, 0}, 0}, {{5, 5}, 1}, {{5, 5}, 1}};
  CHECK(separability_score(two) == doctest::Approx(1.0));
  std::vector<Embedding> same = {{{1, 1}, 0}, {{1, 1}, 0}, {{1, 1}, 1}, {{1, 1}, 1}};
  CHECK(separability_score(same) == 0.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (int seed = 0; seed < 10; ++seed) {
    std::vector<Embedding> blob;
    for (int i = 0; i < 60; ++i) blob.push_back({{n(rng), n(rng), n(rng)}, rng() % 3});
    const double s = separability_score(blob);
    CHECK(std::abs(s) <= 0.15);
    CHECK(s == doctest::Approx(silhouette_oracle(blob)).epsilon(1e-12));
  }
  std::vector<Embedding> lonely = {{{0}, 0}, {{1}, 0}, {{2}, 1}};
  CHECK_THROWS_AS(separability_score(lonely), Error);
}

TEST_CASE("model text form round-trips within nine digits") {
  testing::TempDir dir;
  const auto m = init_model({3, 5, 2}, 21);
  write_model(m, dir / "m.txt");
  write_model(m, dir / "m2.txt");
  CHECK(testing::slurp(dir / "m.txt") == testing::slurp(dir / "m2.txt"));
  const auto text = serialize_model(m);
  CHECK(text.rfind("layers: 3,5,2\n", 0) == 0);
  const auto back = load_model(dir / "m.txt");
  CHECK(back.layer_sizes == m.layer_sizes);
  CHECK(back.rng_seed == 21);
  const auto a = m.flatten(), b = back.flatten();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-8));
  CHECK(serialize_model(back) == text);
  CHECK_THROWS_AS(parse_model("layers: 3,x\n"), Error);
  CHECK_THROWS_AS(parse_model(text.substr(0, text.size() / 2)), Error);
  CHECK_THROWS_AS(load_model(dir / "missing.txt"), Error);
}
