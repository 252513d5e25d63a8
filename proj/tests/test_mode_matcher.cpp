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
#include <random>

#include "gwsdr/classifier.hpp"
#include "gwsdr/error.hpp"
#include "gwsdr/mode_matcher.hpp"
#include "gwsdr/seeding.hpp"

using namespace gwsdr;

namespace {

// Two outputs, logits = x. argmax is 0 iff x0 >= x1.
ClassifierModel identity_logits() {
  auto m = init_model({2, 2}, 0);
  m.layers[0].weights = Eigen::Matrix2d::Identity();
  m.layers[0].bias.setZero();
  return m;
}

LabeledDataset source_of(const std::vector<std::vector<std::vector<double>>>& classes) {
  LabeledDataset ds;
  ds.feature_dim = classes.front().front().size();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    ds.class_names.push_back("s" + std::to_string(c));
    for (const auto& v : classes[c]) ds.samples.push_back({v, c});
  }
  return ds;
}

struct Trained {
  SyntheticBenchmark bench;
  ClassifierModel target_model;
};

Trained trained_on_target(std::uint64_t seed, const SyntheticSpec& base = {}) {
  SyntheticSpec spec = base;
  spec.seed = seed;
  Trained t{generate_synthetic(spec), {}};
  TrainConfig tc;
  tc.seed = mix_seed(seed, 1);
  t.target_model =
      train(init_model({spec.feature_dim, 16, spec.num_target_classes}, seed), t.bench.target, tc)
          .model;
  return t;
}

}  // namespace

TEST_CASE("log-likelihood of explicit probabilities") {
  const std::vector<double> p = {0.5, 0.25};
  CHECK(class_log_likelihood(p) == doctest::Approx(-2.07944).epsilon(1e-5));
  CHECK(class_log_likelihood(std::vector<double>{1.0}) == 0.0);
  CHECK(class_log_likelihood(std::vector<double>{0.0}) == doctest::Approx(std::log(1e-300)));
  CHECK_THROWS_AS(class_log_likelihood(std::vector<double>{}), Error);
}

TEST_CASE("uniform model gives l log(1/M)") {
  auto m = init_model({3, 5, 4}, 1);
  m.assign(std::vector<double>(m.parameter_count(), 0.0));
  std::vector<std::vector<double>> xs = {{1, 2, 3}, {-1, 0, 4}, {0, 0, 0}, {9, 9, 9}, {2, 2, 2}};
  for (std::size_t q = 0; q < 4; ++q)
    CHECK(class_log_likelihood(m, xs, q) == doctest::Approx(5 * std::log(0.25)).epsilon(1e-12));
  CHECK_THROWS_AS(class_log_likelihood(m, xs, 4), Error);
  CHECK_THROWS_AS(class_log_likelihood(m, std::span<const std::vector<double>>{}, 0), Error);
}

TEST_CASE("log-domain sum equals the direct product") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (int c = 0; c < 50; ++c) {
    const auto m = init_model({3, 5, 4}, 100 + c);
    const std::size_t l = 1 + c % 8, q = c % 4;
    std::vector<std::vector<double>> xs(l, std::vector<double>(3));
    double product = 1.0;
    for (auto& x : xs) {
      for (auto& v : x) v = 2 * n(rng);
      product *= predict_probs(m, x)[q];
    }
    CHECK(std::exp(class_log_likelihood(m, xs, q)) == doctest::Approx(product).epsilon(1e-9));
  }
}

TEST_CASE("count method picks the class with the most argmax votes") {
  const auto model = identity_logits();
  const auto source = source_of({
      {{1, 0}, {2, 0}, {3, 0}, {0, 1}},
      {{1, 0}, {0, 1}, {0, 2}, {0, 3}},
      {{0, 1}, {0, 2}, {0, 3}, {0, 4}},
  });
  MatchConfig cfg;
  cfg.samples_per_class = 4;
  const auto rep = match_modes(model, source, 2, cfg);
  REQUIRE(rep.ranked[0].size() == 3);
  CHECK(rep.ranked[0][0].source_class == 0);
  CHECK(rep.ranked[0][0].argmax_count == 3);
  CHECK(rep.ranked[0][1].argmax_count == 1);
  CHECK(rep.ranked[0][2].argmax_count == 0);
  CHECK(rep.matched[0] == 0);
  CHECK(rep.matched[1] == 2);
  for (std::size_t q = 0; q < 2; ++q) CHECK(rep.ranked[q][0].source_class == rep.matched[q]);
}

TEST_CASE("count ties fall to mean probability, then to the lower index") {
  const auto model = identity_logits();
  MatchConfig cfg;
  cfg.samples_per_class = 4;
  // Same vote count, class 1 is more confident.
  const auto confident = source_of({
      {{0.1, 0}, {0.1, 0}, {0, 1}, {0, 1}},
      {{5, 0}, {5, 0}, {0, 1}, {0, 1}},
      {{0, 1}, {0, 1}, {0, 1}, {0, 1}},
  });
  CHECK(match_modes(model, confident, 2, cfg).matched[0] == 1);
  // Fully tied.
  const auto same = source_of({
      {{0, 3}, {1, 0}, {1, 0}, {0, 3}},
      {{1, 0}, {0, 3}, {1, 0}, {0, 3}},
      {{0, 1}, {0, 1}, {0, 1}, {0, 1}},
  });
  CHECK(match_modes(model, same, 2, cfg).matched[0] == 0);
}

TEST_CASE("ranks_before orders by each method's key") {
  MatchScore a{0, 0, -1.0, 2, 4, 0.4}, b{0, 1, -2.0, 3, 4, 0.3};
  CHECK(ranks_before(b, a, MatchMethod::kCount));
  CHECK(ranks_before(a, b, MatchMethod::kLikelihood));
  MatchScore c = a;
  c.source_class = 5;
  CHECK(ranks_before(a, c, MatchMethod::kCount));
  CHECK_FALSE(ranks_before(c, a, MatchMethod::kCount));
}

TEST_CASE("a target class nobody votes for falls back to likelihood") {
  auto model = init_model({2, 3}, 0);
  model.layers[0].weights << 1, 0, 0, 1, 0, 0;
  model.layers[0].bias << 0, 0, -50;
  const auto source = source_of({{{1, 0}, {2, 0}}, {{0, 1}, {0, 2}}});
  MatchConfig cfg;
  cfg.samples_per_class = 2;
  const auto rep = match_modes(model, source, 3, cfg);
  bool warned = false;
  for (const auto& w : rep.warnings) warned |= w.find("target class 2") != std::string::npos;
  CHECK(warned);
  // Class 0 samples give logit 0 for class 1 and 2; class 1 samples give 0 and 1..2 for class 1.
  CHECK(rep.ranked[2][0].log_likelihood >= rep.ranked[2][1].log_likelihood);
}

TEST_CASE("many-to-one matches are kept with a warning") {
  // Source 0 is confidently split between both targets, source 1 weakly.
  const auto source = source_of({{{5, 0}, {0, 5}}, {{0.1, 0}, {0, 0.1}}});
  MatchConfig cfg;
  cfg.samples_per_class = 2;
  const auto rep = match_modes(identity_logits(), source, 2, cfg);
  CHECK(rep.matched == std::vector<std::size_t>{0, 0});
  REQUIRE(rep.warnings.size() == 1);
  CHECK(rep.warnings[0].find("s0") != std::string::npos);
  const auto set = relabel_matched(source, rep, 1, {}, 3);
  CHECK(set.data.samples.size() == 2);
  CHECK(set.source_ids[0] != set.source_ids[1]);
}

TEST_CASE("match_modes rejects bad inputs") {
  const auto model = identity_logits();
  const auto source = source_of({{{1, 0}, {2, 0}}, {{0, 1}}});
  MatchConfig cfg;
  cfg.samples_per_class = 2;
  CHECK_THROWS_AS(match_modes(model, source, 2, cfg), Error);
  cfg.samples_per_class = 1;
  CHECK_THROWS_AS(match_modes(model, source, 3, cfg), Error);
  CHECK_NOTHROW(match_modes(model, source, 2, cfg));
  CHECK(parse_match_method("count") == MatchMethod::kCount);
  CHECK(parse_match_method("likelihood") == MatchMethod::kLikelihood);
  CHECK_THROWS_AS(parse_match_method("vote"), Error);
}

TEST_CASE("synthetic benchmark: both methods recover the generator's map") {
  std::size_t count_ok = 0, lik_ok = 0, agree = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = trained_on_target(seed);
    MatchConfig cfg;
    cfg.seed = seed;
    const auto by_count = match_modes(t.target_model, t.bench.source, 8, cfg);
    cfg.method = MatchMethod::kLikelihood;
    const auto by_lik = match_modes(t.target_model, t.bench.source, 8, cfg);
    count_ok += by_count.matched == t.bench.ground_truth_map;
    lik_ok += by_lik.matched == t.bench.ground_truth_map;
    agree += by_count.matched == by_lik.matched;
  }
  CHECK(count_ok >= 18);
  CHECK(lik_ok >= 18);
  CHECK(agree >= 18);
}

TEST_CASE("methods agree when the target is the source") {
  SyntheticSpec spec;
  spec.target_perturbation = 0.0;
  spec.class_separation = 20.0;
  spec.num_target_classes = 5;
  spec.ground_truth_map = {4, 0, 6, 2, 7};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = trained_on_target(seed, spec);
    MatchConfig cfg;
    cfg.seed = seed;
    const auto a = match_modes(t.target_model, t.bench.source, 5, cfg);
    cfg.method = MatchMethod::kLikelihood;
    const auto b = match_modes(t.target_model, t.bench.source, 5, cfg);
    CHECK(a.matched == b.matched);
    CHECK(a.matched == spec.ground_truth_map);
  }
}

TEST_CASE("second best is the rank two entry") {
  ModeMatchReport rep;
  rep.method = MatchMethod::kLikelihood;
  rep.ranked = {{{0, 5, -1.0, 0, 1, 0}, {0, 2, -3.0, 0, 1, 0}, {0, 7, -9.0, 0, 1, 0}},
                {{1, 1, -1.0, 0, 1, 0}, {1, 0, -2.0, 0, 1, 0}},
                {{2, 3, -1.0, 0, 1, 0}}};
  rep.matched = {5, 1, 3};
  CHECK(second_best(rep, 0) == 2);
  CHECK(second_best(rep, 1) == 0);
  CHECK_THROWS_AS(second_best(rep, 2), Error);
  CHECK_THROWS_AS(second_best(rep, 3), Error);

  const auto t = trained_on_target(5);
  MatchConfig cfg;
  cfg.seed = 5;
  const auto bench_rep = match_modes(t.target_model, t.bench.source, 8, cfg);
  const auto sb = second_best_map(bench_rep);
  for (std::size_t q = 0; q < 8; ++q) {
    CHECK(sb[q] != bench_rep.matched[q]);
    CHECK(sb[q] == bench_rep.ranked[q][1].source_class);
  }
}

TEST_CASE("argmax votes ignore a common logit shift") {
  const auto t = trained_on_target(2);
  auto shifted = t.target_model;
  shifted.layers.back().bias.array() += 3.7;
  MatchConfig cfg;
  cfg.seed = 2;
  const auto a = match_modes(t.target_model, t.bench.source, 8, cfg);
  const auto b = match_modes(shifted, t.bench.source, 8, cfg);
  for (std::size_t q = 0; q < 8; ++q)
    for (std::size_t r = 0; r < a.ranked[q].size(); ++r)
      CHECK(a.ranked[q][r].argmax_count == b.ranked[q][r].argmax_count);
  CHECK(a.matched == b.matched);
}

TEST_CASE("report table layout") {
  const auto model = identity_logits();
  const auto source = source_of({{{1, 0}}, {{0, 1}}});
  MatchConfig cfg;
  cfg.samples_per_class = 1;
  const auto text = format_report(match_modes(model, source, 2, cfg));
  CHECK(text.rfind("target_class,rank,source_class,log_likelihood,argmax_count,mean_prob\n", 0) ==
        0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  CHECK(text.find("\n0,1,0,") != std::string::npos);
  CHECK(text.find("\n1,1,1,") != std::string::npos);
}

TEST_CASE("candidate offsets include the tail window") {
  CHECK(candidate_offsets(10, 4, 2) == std::vector<std::size_t>{0, 2, 4, 6});
  CHECK(candidate_offsets(11, 4, 3) == std::vector<std::size_t>{0, 3, 6, 7});
  CHECK(candidate_offsets(4, 4, 1) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(candidate_offsets(3, 4, 1), Error);
  CHECK_THROWS_AS(candidate_offsets(10, 4, 0), Error);
}

TEST_CASE("trimming finds the active span") {
  SyntheticSpec spec;
  spec.seed = 11;
  const auto bench = generate_synthetic(spec);
  TrainConfig tc;
  tc.seed = 3;
  const auto model = train(init_model({4, 16, 8}, 11), bench.source, tc).model;
  SequenceSpec seq;
  seq.sequence_length = 10;
  seq.span_length = 4;
  seq.span_alignment = 2;
  seq.seed = 12;
  const auto data = generate_sequences(bench.source_means, bench.source.class_names, seq);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.data.samples.size(); ++i) {
    const auto& s = data.data.samples[i];
    const auto t = trim_sequence(model, s.values, 4, s.label, 4, 2);
    // Exhaustive oracle over every candidate window.
    std::size_t best = 0;
    double best_p = -1;
    for (auto o : candidate_offsets(10, 4, 2)) {
      const auto pooled = mean_pool(std::span(s.values).subspan(o * 4, 16), 4);
      const double p = predict_probs(model, pooled)[s.label];
      if (p > best_p) best_p = p, best = o;
    }
    CHECK(t.offset == best);
    CHECK(t.score == doctest::Approx(best_p).epsilon(1e-12));
    CHECK(t.frames.size() == 16);
    CHECK(std::equal(t.frames.begin(), t.frames.end(), s.values.begin() + t.offset * 4));
    hits += t.offset == data.span_offsets[i];
  }
  CHECK(hits * 10 >= data.data.samples.size() * 9);
}

TEST_CASE("uniform scores trim at offset zero") {
  auto m = init_model({2, 3}, 0);
  m.assign(std::vector<double>(m.parameter_count(), 0.0));
  std::vector<double> seq(2 * 12);
  for (std::size_t i = 0; i < seq.size(); ++i) seq[i] = static_cast<double>(i);
  CHECK(trim_sequence(m, seq, 2, 1, 4, 2).offset == 0);
  CHECK_THROWS_AS(trim_sequence(m, seq, 2, 1, 13, 2), Error);
  CHECK_THROWS_AS(trim_sequence(m, seq, 2, 1, 4, 0), Error);
  CHECK_THROWS_AS(trim_sequence(m, seq, 3, 1, 4, 2), Error);
}

TEST_CASE("relabeling draws a fixed budget from each matched class") {
  SyntheticSpec spec;
  spec.seed = 21;
  const auto bench = generate_synthetic(spec);
  ModeMatchReport rep;
  rep.matched = bench.ground_truth_map;
  rep.target_names = bench.target.class_names;
  rep.source_names = bench.source.class_names;

  const auto first = relabel_matched(bench.source, rep, 10, {}, 1);
  CHECK(first.data.samples.size() == 80);
  CHECK(first.data.class_names == bench.target.class_names);
  CHECK(first.data.class_counts() == std::vector<std::size_t>(8, 10));
  for (std::size_t i = 0; i < first.source_ids.size(); ++i)
    CHECK(bench.source.samples[first.source_ids[i]].label ==
          rep.matched[first.data.samples[i].label]);

  std::set<std::size_t> used(first.source_ids.begin(), first.source_ids.end());
  CHECK(used.size() == 80);
  const auto second = relabel_matched(bench.source, rep, 10, used, 1);
  for (auto id : second.source_ids) CHECK(used.count(id) == 0);

  CHECK(relabel_matched(bench.source, rep, 10, {}, 1).source_ids == first.source_ids);
  try {
    relabel_matched(bench.source, rep, 101, {}, 1);
    FAIL("expected budget exhaustion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBudgetExhausted);
  }
}

TEST_CASE("a source classifier agrees with the relabeled classes") {
  SyntheticSpec spec;
  spec.seed = 22;
  const auto bench = generate_synthetic(spec);
  TrainConfig tc;
  tc.seed = 4;
  const auto phi = train(init_model({4, 16, 8}, 22), bench.source, tc).model;
  const auto set = relabel_matched(bench.source, bench.ground_truth_map,
                                   bench.target.class_names, 20, {}, 5);
  std::size_t ok = 0;
  for (const auto& s : set.data.samples)
    ok += argmax(forward(phi, s.values).probs) == bench.ground_truth_map[s.label];
  CHECK(ok * 10 >= set.data.samples.size() * 9);
}
