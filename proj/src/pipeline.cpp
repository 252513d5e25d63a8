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

#include "gwsdr/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "gwsdr/error.hpp"
#include "gwsdr/seeding.hpp"

namespace gwsdr {

namespace {

std::vector<std::size_t> random_map(const ModeMatchReport& report, std::size_t num_source,
                                    std::uint64_t seed) {
  require(num_source >= 2, ErrorCode::kInvalidArgument,
          "random augmentation needs at least 2 source classes");
  Rng rng = make_rng(seed, 0x72616e64);
  std::uniform_int_distribution<std::size_t> pick(0, num_source - 2);
  std::vector<std::size_t> out;
  for (auto m : report.matched) {
    auto p = pick(rng);
    if (p >= m) ++p;  // skip the matched class
    out.push_back(p);
  }
  return out;
}

// Brings relabeled source samples into the target's sample layout, trimming
// sequences first when configured.
LabeledDataset to_target_layout(const RelabeledSet& aug, const LabeledDataset& source,
                                const LabeledDataset& target, const ClassifierModel& scorer,
                                const std::optional<TrimConfig>& trim) {
  LabeledDataset out = empty_like(target);
  for (const auto& s : aug.data.samples) {
    std::vector<double> values = s.values;
    std::optional<std::size_t> frames = source.sequence_length;
    if (trim && source.is_sequence()) {
      values = trim_sequence(scorer, values, source.feature_dim, s.label, trim->window,
                             trim->stride)
                   .frames;
      frames = trim->window;
    }
    if (frames != target.sequence_length) {
      require(!target.is_sequence(), ErrorCode::kShapeMismatch,
              "augmented sequences do not match the target sequence length");
      values = mean_pool(values, source.feature_dim);
    }
    out.samples.push_back({std::move(values), s.label});
  }
  return out;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  LabeledDataset out = a;
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  return out;
}

TrainConfig round_config(const PipelineConfig& cfg, std::size_t round) {
  TrainConfig t = cfg.retrain_cfg;
  t.seed = mix_seed(cfg.retrain_cfg.seed, round);
  if (!cfg.use_dr) t.dr_weight = 0.0;
  return t;
}

}  // namespace

std::string to_string(AugmentPolicy p) {
  switch (p) {
    case AugmentPolicy::kMatched: return "matched";
    case AugmentPolicy::kSecondBest: return "second_best";
    case AugmentPolicy::kRandom: return "random";
  }
  return "unknown";
}

AugmentPolicy PipelineConfig::policy() const {
  if (random_control) return AugmentPolicy::kRandom;
  if (use_second_best) return AugmentPolicy::kSecondBest;
  return AugmentPolicy::kMatched;
}

void PipelineConfig::validate() const {
  require(hidden >= 1, ErrorCode::kInvalidArgument, "hidden must be positive");
  require(iterations >= 1, ErrorCode::kInvalidArgument, "iterations must be >= 1");
  require(augment_budget >= 1, ErrorCode::kInvalidArgument, "augment_budget must be >= 1");
  require(!(random_control && use_second_best), ErrorCode::kInvalidArgument,
          "random_control and use_second_best are mutually exclusive");
  require(source_holdout > 0.0 && source_holdout < 1.0, ErrorCode::kInvalidArgument,
          "source_holdout must be in (0, 1)");
  if (trim)
    require(trim->window >= 1 && trim->stride >= 1, ErrorCode::kInvalidArgument,
            "trim window and stride must be positive");
  baseline_cfg.validate();
  source_cfg.validate();
  TrainConfig r = retrain_cfg;
  if (!use_dr) r.dr_weight = 0.0;
  r.validate();
}

SourceClassifier train_source_classifier(const LabeledDataset& source,
                                         std::span<const std::size_t> class_map,
                                         const std::vector<std::string>& target_names,
                                         const ClassifierModel& init, const TrainConfig& cfg,
                                         double holdout_fraction, std::uint64_t seed) {
  source.validate();
  require(class_map.size() == target_names.size(), ErrorCode::kInvalidArgument,
          "one source class per target class required");
  require(init.num_classes() == target_names.size(), ErrorCode::kShapeMismatch,
          "source classifier must have one output per target class");
  SourceClassifier out;
  const auto by_class = source.indices_by_class();
  LabeledDataset relabeled;
  relabeled.class_names = target_names;
  relabeled.feature_dim = source.feature_dim;
  relabeled.sequence_length = source.sequence_length;
  std::vector<std::size_t> seen_at(by_class.size(), class_map.size());
  for (std::size_t q = 0; q < class_map.size(); ++q) {
    const auto p = class_map[q];
    require(p < by_class.size(), ErrorCode::kInvalidArgument, "mapped source class out of range");
    require(by_class[p].size() >= 2, ErrorCode::kInvalidArgument,
            "matched source class " + source.class_names[p] + " has fewer than 2 samples");
    if (seen_at[p] != class_map.size())
      out.warnings.push_back("source class " + source.class_names[p] +
                             " is used for target classes " + std::to_string(seen_at[p]) +
                             " and " + std::to_string(q));
    else
      seen_at[p] = q;
    for (auto i : by_class[p]) relabeled.samples.push_back({source.samples[i].values, q});
  }
  auto [fit, heldout] = split_dataset(relabeled, 1.0 - holdout_fraction, seed);
  auto trained = train(init, fit, cfg);
  out.model = std::move(trained.model);
  out.trace = std::move(trained.epochs);
  out.heldout_accuracy = evaluate(out.model, heldout).accuracy;
  return out;
}

SourceClassifier train_source_classifier(const LabeledDataset& source,
                                         const ModeMatchReport& report,
                                         const ClassifierModel& init, const TrainConfig& cfg,
                                         double holdout_fraction, std::uint64_t seed) {
  return train_source_classifier(source, report.matched, report.target_names, init, cfg,
                                 holdout_fraction, seed);
}

PipelinePrep prepare_pipeline(const LabeledDataset& source, const LabeledDataset& target_train,
                              const LabeledDataset& target_test, const PipelineConfig& cfg) {
  cfg.validate();
  source.validate();
  target_train.validate();
  target_test.validate();
  require(source.feature_dim == target_train.feature_dim &&
              target_train.feature_dim == target_test.feature_dim,
          ErrorCode::kShapeMismatch, "source and target datasets must share feature_dim");
  require(target_train.class_names.size() == target_test.class_names.size(),
          ErrorCode::kShapeMismatch, "target train and test class counts differ");

  PipelinePrep prep;
  const std::size_t m = target_train.num_classes();
  auto baseline = train(init_model({target_train.feature_dim, cfg.hidden, m}, cfg.init_seed),
                        target_train, cfg.baseline_cfg);
  prep.baseline_model = std::move(baseline.model);
  prep.baseline_trace = std::move(baseline.epochs);
  const auto ev = evaluate(prep.baseline_model, target_test);
  prep.baseline_accuracy = ev.accuracy;
  prep.baseline_confusion = ev.confusion;
  const auto emb = embed_dataset(prep.baseline_model, target_test);
  prep.baseline_separability = separability_score(emb);

  prep.report = match_modes(prep.baseline_model, source, m, cfg.match_cfg);
  prep.report.target_names = target_train.class_names;

  const ClassifierModel source_init =
      cfg.source_warm_start
          ? prep.baseline_model
          : init_model(prep.baseline_model.layer_sizes, mix_seed(cfg.init_seed, 0x706869));
  prep.source = train_source_classifier(source, prep.report, source_init, cfg.source_cfg,
                                        cfg.source_holdout, mix_seed(cfg.seed, 0x686f6c64));
  return prep;
}

PipelineResult run_rounds(const PipelinePrep& prep, const LabeledDataset& source,
                          const LabeledDataset& target_train, const LabeledDataset& target_test,
                          const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult res;
  res.prep = prep;
  res.warnings = prep.report.warnings;
  res.warnings.insert(res.warnings.end(), prep.source.warnings.begin(),
                      prep.source.warnings.end());
  std::size_t smallest_source = source.samples.size();
  for (auto c : source.class_counts()) smallest_source = std::min(smallest_source, c);
  if (target_train.samples.size() > 10 * smallest_source)
    res.warnings.push_back("target training set is not scarce relative to the source classes");

  switch (cfg.policy()) {
    case AugmentPolicy::kMatched: res.augment_map = prep.report.matched; break;
    case AugmentPolicy::kSecondBest: res.augment_map = second_best_map(prep.report); break;
    case AugmentPolicy::kRandom:
      res.augment_map = random_map(prep.report, source.num_classes(), cfg.seed);
      break;
  }

  ClassifierModel theta = prep.baseline_model;
  std::set<std::size_t> used;
  for (std::size_t r = 1; r <= cfg.iterations; ++r) {
    RelabeledSet aug;
    try {
      aug = relabel_matched(source, res.augment_map, target_train.class_names,
                            cfg.augment_budget, used, mix_seed(cfg.seed, 0x61756700 + r));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBudgetExhausted) throw;
      res.truncated = "round " + std::to_string(r) + ": " + e.what();
      res.warnings.push_back(*res.truncated);
      break;
    }
    const auto extra =
        to_target_layout(aug, source, target_train, prep.baseline_model, cfg.trim);
    auto trained = train(theta, concat(target_train, extra), round_config(cfg, r),
                         &prep.source.model);
    theta = std::move(trained.model);

    RoundRecord rec;
    rec.round = r;
    const auto ev = evaluate(theta, target_test);
    rec.test_accuracy = ev.accuracy;
    rec.confusion = ev.confusion;
    rec.separability = separability_score(embed_dataset(theta, target_test));
    rec.trace = std::move(trained.epochs);
    rec.used_source_ids = aug.source_ids;
    used.insert(aug.source_ids.begin(), aug.source_ids.end());
    res.rounds.push_back(std::move(rec));
  }
  res.final_model = std::move(theta);
  return res;
}

PipelineResult run_pipeline_partial(const LabeledDataset& source,
                                    const LabeledDataset& target_train,
                                    const LabeledDataset& target_test,
                                    const PipelineConfig& cfg) {
  const auto prep = prepare_pipeline(source, target_train, target_test, cfg);
  return run_rounds(prep, source, target_train, target_test, cfg);
}

PipelineResult run_pipeline(const LabeledDataset& source, const LabeledDataset& target_train,
                            const LabeledDataset& target_test, const PipelineConfig& cfg) {
  auto res = run_pipeline_partial(source, target_train, target_test, cfg);
  if (res.truncated) fail(ErrorCode::kBudgetExhausted, *res.truncated);
  return res;
}

std::size_t budget_for_fraction(const LabeledDataset& target_train, double fraction) {
  require(fraction > 0.0, ErrorCode::kInvalidArgument, "budget fraction must be positive");
  auto counts = target_train.class_counts();
  const auto per_class = *std::min_element(counts.begin(), counts.end());
  const auto budget = static_cast<long long>(std::llround(fraction * static_cast<double>(per_class)));
  require(budget >= 1, ErrorCode::kInvalidArgument,
          "fraction maps to a budget below one sample per class");
  return static_cast<std::size_t>(budget);
}

SweepResult augmentation_sweep(const LabeledDataset& source, const LabeledDataset& target_train,
                               const LabeledDataset& target_test, const PipelineConfig& cfg,
                               const std::vector<double>& fractions, bool include_random) {
  require(!fractions.empty(), ErrorCode::kInvalidArgument, "no fractions given");
  require(std::is_sorted(fractions.begin(), fractions.end()), ErrorCode::kInvalidArgument,
          "fractions must be sorted ascending");
  const auto prep = prepare_pipeline(source, target_train, target_test, cfg);
  SweepResult out;
  out.baseline_accuracy = prep.baseline_accuracy;
  out.source_heldout_accuracy = prep.source.heldout_accuracy;
  out.matched = prep.report.matched;
  out.warnings = prep.report.warnings;

  struct Variant {
    const char* name;
    bool dr;
    bool random;
  };
  std::vector<Variant> variants = {{"gws", false, false}, {"gws_dr", true, false}};
  if (include_random) variants.push_back({"random", false, true});

  for (double f : fractions) {
    out.points.push_back({"baseline", f, prep.baseline_accuracy, prep.baseline_separability});
    const auto budget = budget_for_fraction(target_train, f);
    for (const auto& v : variants) {
      PipelineConfig c = cfg;
      c.iterations = 1;
      c.augment_budget = budget;
      c.use_dr = v.dr;
      c.random_control = v.random;
      c.use_second_best = v.random ? false : cfg.use_second_best;
      const auto res = run_rounds(prep, source, target_train, target_test, c);
      if (res.truncated) {
        out.truncated = true;
        out.warnings.push_back(std::string(v.name) + " at fraction " + std::to_string(f) +
                               ": " + *res.truncated);
        continue;
      }
      out.points.push_back(
          {v.name, f, res.rounds.back().test_accuracy, res.rounds.back().separability});
    }
  }
  return out;
}

SweepResult iteration_sweep(const LabeledDataset& source, const LabeledDataset& target_train,
                            const LabeledDataset& target_test, const PipelineConfig& cfg,
                            std::size_t max_iterations) {
  require(max_iterations >= 1, ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
  const auto prep = prepare_pipeline(source, target_train, target_test, cfg);
  SweepResult out;
  out.baseline_accuracy = prep.baseline_accuracy;
  out.source_heldout_accuracy = prep.source.heldout_accuracy;
  out.matched = prep.report.matched;
  out.warnings = prep.report.warnings;
  for (bool dr : {false, true}) {
    const char* name = dr ? "gws_dr" : "gws";
    out.points.push_back({name, 0.0, prep.baseline_accuracy, prep.baseline_separability});
    PipelineConfig c = cfg;
    c.iterations = max_iterations;
    c.use_dr = dr;
    const auto res = run_rounds(prep, source, target_train, target_test, c);
    for (const auto& r : res.rounds)
      out.points.push_back({name, static_cast<double>(r.round), r.test_accuracy, r.separability});
    if (res.truncated) {
      out.truncated = true;
      out.warnings.push_back(std::string(name) + ": " + *res.truncated);
    }
  }
  return out;
}

}  // namespace gwsdr
