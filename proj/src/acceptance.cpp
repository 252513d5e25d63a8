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

#include "gwsdr/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include "gwsdr/classifier.hpp"
#include "gwsdr/dataset.hpp"
#include "gwsdr/directional_regularizer.hpp"
#include "gwsdr/error.hpp"
#include "gwsdr/experiment.hpp"
#include "gwsdr/mode_matcher.hpp"
#include "gwsdr/numeric_io.hpp"
#include "gwsdr/seeding.hpp"

namespace gwsdr {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "missing artifact " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_x(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// Model with small seeded offsets on every parameter so biases are nonzero.
ClassifierModel jittered_model(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  auto m = init_model(sizes, seed);
  auto p = m.flatten();
  Rng rng = make_rng(seed, 0x6a6974);
  std::normal_distribution<double> n(0.0, 0.05);
  for (auto& v : p) v += n(rng);
  m.assign(p);
  return m;
}

CriterionResult fail_missing(int id, const std::string& name, const std::string& what) {
  return {id, name, false, what};
}

}  // namespace

std::string format_result(const CriterionResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name +
         ": " + r.detail;
}

std::optional<double> SweepTable::mean_accuracy(const std::string& variant, double x) const {
  double s = 0;
  std::size_t n = 0;
  for (const auto& r : rows)
    if (r.variant == variant && same_x(r.x, x)) s += r.accuracy, ++n;
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

std::optional<double> SweepTable::mean_separability(const std::string& variant, double x) const {
  double s = 0;
  std::size_t n = 0;
  for (const auto& r : rows)
    if (r.variant == variant && same_x(r.x, x)) s += r.separability, ++n;
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

std::size_t SweepTable::seed_count(const std::string& variant, double x) const {
  std::set<std::uint64_t> seeds;
  for (const auto& r : rows)
    if (r.variant == variant && same_x(r.x, x)) seeds.insert(r.seed);
  return seeds.size();
}

SweepTable parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && trim(line) == kSweepCsvHeader,
          ErrorCode::kParse, std::string("expected header ") + kSweepCsvHeader);
  SweepTable t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    require(f.size() == 5, ErrorCode::kParse,
            "csv line " + std::to_string(lineno) + ": expected 5 fields");
    SweepRow r;
    r.variant = std::string(trim(f[0]));
    r.x = parse_real(f[1]);
    r.seed = static_cast<std::uint64_t>(parse_int(f[2]));
    r.accuracy = parse_real(f[3]);
    r.separability = parse_real(f[4]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

SweepTable load_sweep_csv(const fs::path& path) { return parse_sweep_csv(read_file(path)); }

CriterionResult check_dr_gradient() {
  CriterionResult r{1, "dr-gradient", false, ""};
  const auto t0 = Clock::now();
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t coords = 0;
  for (std::size_t k : {1, 2, 4}) {
    auto theta = jittered_model({4, 6, 3}, 11 + k);
    const auto phi = jittered_model({4, 6, 3}, 101 + k);
    const auto g = dr_grad(theta, phi, k);
    auto p = theta.flatten();
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto up = theta, down = theta;
      auto pu = p, pd = p;
      pu[i] += h;
      pd[i] -= h;
      up.assign(pu);
      down.assign(pd);
      const double fd = (dr_loss(up, phi, k) - dr_loss(down, phi, k)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g.gradient[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - g.gradient[i]) / denom);
      ++coords;
    }
  }
  const double secs = seconds_since(t0);
  r.passed = worst < 1e-4 && secs < 10.0;
  r.detail = "max relative error " + format_real(worst, 3) + " over " + std::to_string(coords) +
             " coordinates (k = 1, 2, 4, 51 parameters) in " + format_real(secs, 3) + " s";
  return r;
}

CriterionResult check_dr_identities() {
  CriterionResult r{2, "dr-identities", false, ""};
  double self = 0.0;
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto theta = jittered_model({4, 6, 3}, 40 + k);
    self = std::max(self, dr_loss(theta, theta, k));
  }
  Eigen::MatrixXd a = Eigen::Vector4d(4, 3, 1, 0.5).asDiagonal();
  Eigen::MatrixXd b = Eigen::Vector4d(1, 0.5, 4, 3).asDiagonal();
  const double ortho =
      aligned_frobenius_loss(significant_eigvecs(a, 2), significant_eigvecs(b, 2));
  const double err = std::abs(ortho - std::sqrt(2.0));
  r.passed = self < 1e-8 && err <= 1e-8;
  r.detail = "max self loss " + format_real(self, 3) + ", orthogonal 4x4 k=2 loss " +
             format_real(ortho, 12) + " (|err| " + format_real(err, 3) + ")";
  return r;
}

CriterionResult check_likelihood_oracle() {
  CriterionResult r{3, "likelihood-oracle", false, ""};
  Rng rng = make_rng(2027, 0x6c6c);
  std::uniform_int_distribution<std::size_t> pick_l(1, 8), pick_q(0, 3);
  std::normal_distribution<double> feat(0.0, 1.5);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const auto model = jittered_model({3, 5, 4}, 500 + static_cast<std::uint64_t>(c));
    const auto l = pick_l(rng);
    const auto q = pick_q(rng);
    std::vector<std::vector<double>> xs(l, std::vector<double>(3));
    for (auto& x : xs)
      for (auto& v : x) v = feat(rng);
    double product = 1.0;
    for (const auto& x : xs) product *= predict_probs(model, x)[q];
    const double ll = class_log_likelihood(model, xs, q);
    worst = std::max(worst, std::abs(std::exp(ll) - product) / product);
  }
  r.passed = worst < 1e-9;
  r.detail = "max relative error " + format_real(worst, 3) + " over 100 cases (l <= 8)";
  return r;
}

CriterionResult check_mode_recovery() {
  CriterionResult r{4, "mode-recovery", false, ""};
  const auto t0 = Clock::now();
  std::size_t count_ok = 0, lik_ok = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    const auto bench = generate_synthetic(spec);
    TrainConfig tc;
    tc.seed = mix_seed(seed, 1);
    const auto init = init_model({spec.feature_dim, 16, spec.num_target_classes}, seed);
    const auto model = train(init, bench.target, tc).model;
    for (auto method : {MatchMethod::kCount, MatchMethod::kLikelihood}) {
      MatchConfig mc;
      mc.method = method;
      mc.seed = seed;
      const auto rep = match_modes(model, bench.source, spec.num_target_classes, mc);
      if (rep.matched == bench.ground_truth_map) ++(method == MatchMethod::kCount ? count_ok : lik_ok);
    }
  }
  const double secs = seconds_since(t0);
  r.passed = count_ok >= 18 && lik_ok >= 18 && secs < 120.0;
  r.detail = "exact maps: count " + std::to_string(count_ok) + "/20, likelihood " +
             std::to_string(lik_ok) + "/20 in " + format_real(secs, 3) + " s";
  return r;
}

namespace {

// Mean accuracy cell that also requires a full seed set.
std::optional<double> cell(const SweepTable& t, const std::string& v, double x, std::string& why) {
  const auto n = t.seed_count(v, x);
  if (n < kRequiredSeeds) {
    why += v + "@" + format_real(x) + " has " + std::to_string(n) + " seeds; ";
    return std::nullopt;
  }
  return t.mean_accuracy(v, x);
}

}  // namespace

CriterionResult check_ordering(const SweepTable& t) {
  CriterionResult r{5, "accuracy-ordering", false, ""};
  std::string why;
  const auto b = cell(t, "baseline", 1.0, why);
  const auto g = cell(t, "gws", 1.0, why);
  const auto d = cell(t, "gws_dr", 1.0, why);
  if (!b || !g || !d) {
    r.detail = "incomplete sweep: " + why;
    return r;
  }
  r.passed = *g - *b >= 0.01 - 1e-12 && *g <= *d;
  r.detail = "at 1x: baseline " + format_real(*b, 4) + ", gws " + format_real(*g, 4) +
             ", gws_dr " + format_real(*d, 4) + " (need gws - baseline >= 0.01, gws <= gws_dr)";
  return r;
}

CriterionResult check_inverted_u(const SweepTable& t) {
  CriterionResult r{6, "inverted-u", false, ""};
  const std::vector<double> xs = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::string why;
  std::vector<double> g;
  for (double x : xs)
    if (auto v = cell(t, "gws", x, why)) g.push_back(*v);
  const auto d4 = cell(t, "gws_dr", 4.0, why);
  if (g.size() != xs.size() || !d4) {
    r.detail = "incomplete sweep: " + why;
    return r;
  }
  const auto peak = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
  const bool interior = peak > 0 && peak + 1 < g.size() && g[peak] > g.front() && g[peak] > g.back();
  r.passed = interior && *d4 >= g.back();
  std::string curve;
  for (std::size_t i = 0; i < g.size(); ++i)
    curve += (i ? " " : "") + format_real(xs[i]) + "x=" + format_real(g[i], 4);
  r.detail = "gws " + curve + "; peak at " + format_real(xs[peak]) + "x; gws_dr@4x " +
             format_real(*d4, 4);
  return r;
}

CriterionResult check_random_control(const SweepTable& t) {
  CriterionResult r{7, "random-control", false, ""};
  std::string why;
  const auto g = cell(t, "gws", 1.0, why);
  const auto rnd = cell(t, "random", 1.0, why);
  if (!g || !rnd) {
    r.detail = "incomplete sweep: " + why;
    return r;
  }
  r.passed = *rnd < *g;
  r.detail = "at 1x: random " + format_real(*rnd, 4) + " vs gws " + format_real(*g, 4);
  return r;
}

CriterionResult check_separability(const SweepTable& t) {
  CriterionResult r{8, "separability", false, ""};
  std::string why;
  cell(t, "baseline", 1.0, why);
  cell(t, "gws_dr", 1.0, why);
  if (!why.empty()) {
    r.detail = "incomplete sweep: " + why;
    return r;
  }
  const double b = *t.mean_separability("baseline", 1.0);
  const double d = *t.mean_separability("gws_dr", 1.0);
  r.passed = d >= b;
  r.detail = "mean silhouette at 1x: gws_dr " + format_real(d, 4) + " vs baseline " +
             format_real(b, 4);
  return r;
}

CriterionResult check_source_generalization(const fs::path& augment_json) {
  CriterionResult r{9, "source-generalization", false, ""};
  const auto doc = nlohmann::json::parse(read_file(augment_json));
  double src = 0, base = 0;
  std::size_t n = 0;
  for (const auto& run : doc.at("runs")) {
    src += run.at("source_heldout_accuracy").get<double>();
    base += run.at("baseline_accuracy").get<double>();
    ++n;
  }
  if (n < kRequiredSeeds) {
    r.detail = "only " + std::to_string(n) + " seeds in " + augment_json.filename().string();
    return r;
  }
  src /= static_cast<double>(n);
  base /= static_cast<double>(n);
  r.passed = src >= base;
  r.detail = "source held-out " + format_real(src, 4) + " vs baseline target-test " +
             format_real(base, 4) + " over " + std::to_string(n) + " seeds";
  return r;
}

CriterionResult check_trimming() {
  CriterionResult r{10, "trimming", false, ""};
  SyntheticSpec spec;
  spec.num_source_classes = 10;
  spec.num_target_classes = 10;
  spec.seed = 404;
  const auto bench = generate_synthetic(spec);
  TrainConfig tc;
  tc.seed = mix_seed(spec.seed, 1);
  const auto model =
      train(init_model({spec.feature_dim, 16, spec.num_source_classes}, spec.seed), bench.source,
            tc)
          .model;
  SequenceSpec seq;
  seq.sequence_length = 16;
  seq.span_length = 4;
  seq.span_alignment = 2;
  seq.samples_per_class = 10;
  seq.seed = mix_seed(spec.seed, 2);
  const auto data = generate_sequences(bench.source_means, bench.source.class_names, seq);
  std::size_t hits = 0;
  const auto& samples = data.data.samples;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto t = trim_sequence(model, samples[i].values, spec.feature_dim, samples[i].label,
                                 seq.span_length, seq.span_length / 2);
    hits += t.offset == data.span_offsets[i];
  }
  r.passed = samples.size() == 100 && hits * 10 >= samples.size() * 9;
  r.detail = "exact span offset in " + std::to_string(hits) + "/" +
             std::to_string(samples.size()) + " sequences (w = 4, s = 2)";
  return r;
}

CriterionResult check_determinism(const fs::path& out_dir) {
  CriterionResult r{11, "determinism", false, ""};
  std::string tmpl = (fs::temp_directory_path() / "gwsdr-check-XXXXXX").string();
  require(::mkdtemp(tmpl.data()) != nullptr, ErrorCode::kIo, "cannot create a scratch directory");
  const fs::path scratch(tmpl);
  std::vector<std::string> notes;
  bool ok = true;
  try {
    for (const std::string verb : {"pipeline", "augment", "iterate"}) {
      const auto cfg_path = out_dir / (verb + ".config");
      if (!fs::exists(cfg_path)) {
        ok = false;
        notes.push_back("missing " + cfg_path.string());
        continue;
      }
      const auto cfg = load_experiment_config(cfg_path);
      const auto dir = scratch / verb;
      if (verb == "pipeline") run_pipeline_experiment(cfg, dir);
      if (verb == "augment") run_augment_experiment(cfg, dir);
      if (verb == "iterate") run_iterate_experiment(cfg, dir);
      for (const std::string ext : {".csv", ".json"}) {
        const auto name = verb + ext;
        if (!fs::exists(out_dir / name)) {
          ok = false;
          notes.push_back("missing " + (out_dir / name).string());
        } else if (read_file(out_dir / name) != read_file(dir / name)) {
          ok = false;
          notes.push_back(name + " differs on rerun");
        } else {
          notes.push_back(name + " identical");
        }
      }
    }
  } catch (...) {
    fs::remove_all(scratch);
    throw;
  }
  fs::remove_all(scratch);
  r.passed = ok;
  for (std::size_t i = 0; i < notes.size(); ++i) r.detail += (i ? ", " : "") + notes[i];
  return r;
}

std::vector<CriterionResult> run_acceptance(const fs::path& out_dir) {
  std::vector<CriterionResult> out;
  auto guarded = [&out](int id, const std::string& name, auto fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back(fail_missing(id, name, e.what()));
    }
  };
  guarded(1, "dr-gradient", check_dr_gradient);
  guarded(2, "dr-identities", check_dr_identities);
  guarded(3, "likelihood-oracle", check_likelihood_oracle);
  guarded(4, "mode-recovery", check_mode_recovery);

  const auto csv = out_dir / "augment.csv";
  std::optional<SweepTable> table;
  std::string load_error;
  try {
    table = load_sweep_csv(csv);
  } catch (const std::exception& e) {
    load_error = e.what();
  }
  auto from_table = [&](int id, const std::string& name, auto fn) {
    if (!table) {
      out.push_back(fail_missing(id, name, load_error));
      return;
    }
    guarded(id, name, [&] { return fn(*table); });
  };
  from_table(5, "accuracy-ordering", check_ordering);
  from_table(6, "inverted-u", check_inverted_u);
  from_table(7, "random-control", check_random_control);
  from_table(8, "separability", check_separability);
  guarded(9, "source-generalization",
          [&] { return check_source_generalization(out_dir / "augment.json"); });
  guarded(10, "trimming", check_trimming);
  guarded(11, "determinism", [&] { return check_determinism(out_dir); });
  return out;
}

}  // namespace gwsdr
