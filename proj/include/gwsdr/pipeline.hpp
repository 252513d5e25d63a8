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

#pragma once

// Baseline training -> mode matching -> source classifier -> augmentation
// and (optionally regularized) retraining, repeated for a number of rounds.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gwsdr/classifier.hpp"
#include "gwsdr/dataset.hpp"
#include "gwsdr/mode_matcher.hpp"

namespace gwsdr {

enum class AugmentPolicy {
  kMatched,     // matched[q]
  kSecondBest,  // rank-2 source class per target class
  kRandom,      // uniformly random source class other than matched[q]
};

std::string to_string(AugmentPolicy p);

struct TrimConfig {
  std::size_t window = 4;
  std::size_t stride = 2;
};

struct PipelineConfig {
  std::size_t hidden = 16;
  std::uint64_t init_seed = 0;
  TrainConfig baseline_cfg;
  TrainConfig source_cfg;
  TrainConfig retrain_cfg{.dr_weight = 1.0};
  MatchConfig match_cfg;
  std::size_t augment_budget = 8;  // samples per target class per round
  std::size_t iterations = 1;
  bool use_dr = true;
  bool use_second_best = false;
  bool random_control = false;
  std::optional<TrimConfig> trim;
  /// Fraction of matched source samples held out to score the source classifier.
  double source_holdout = 0.25;
  /// Start the source classifier from the baseline parameters.
  bool source_warm_start = true;
  std::uint64_t seed = 0;

  AugmentPolicy policy() const;
  void validate() const;
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  double test_accuracy = 0.0;
  double separability = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<EpochStats> trace;
  std::vector<std::size_t> used_source_ids;
};

struct SourceClassifier {
  ClassifierModel model;
  double heldout_accuracy = 0.0;
  std::vector<EpochStats> trace;
  std::vector<std::string> warnings;
};

/// Baseline, matching and source classifier: everything that does not depend
/// on the augmentation budget or the variant.
struct PipelinePrep {
  ClassifierModel baseline_model;
  std::vector<EpochStats> baseline_trace;
  double baseline_accuracy = 0.0;
  double baseline_separability = 0.0;
  std::vector<std::vector<std::size_t>> baseline_confusion;
  ModeMatchReport report;
  SourceClassifier source;
};

struct PipelineResult {
  PipelinePrep prep;
  ClassifierModel final_model;
  std::vector<std::size_t> augment_map;  // source class used for each target class
  std::vector<RoundRecord> rounds;
  std::vector<std::string> warnings;
  /// Set when the source ran out of unused samples; rounds holds what finished.
  std::optional<std::string> truncated;
};

SourceClassifier train_source_classifier(const LabeledDataset& source,
                                         std::span<const std::size_t> class_map,
                                         const std::vector<std::string>& target_names,
                                         const ClassifierModel& init, const TrainConfig& cfg,
                                         double holdout_fraction, std::uint64_t seed);

SourceClassifier train_source_classifier(const LabeledDataset& source,
                                         const ModeMatchReport& report,
                                         const ClassifierModel& init, const TrainConfig& cfg,
                                         double holdout_fraction, std::uint64_t seed);

PipelinePrep prepare_pipeline(const LabeledDataset& source, const LabeledDataset& target_train,
                              const LabeledDataset& target_test, const PipelineConfig& cfg);

/// Augmentation rounds on top of an existing prep. Never throws on budget
/// exhaustion; the result is marked truncated instead.
PipelineResult run_rounds(const PipelinePrep& prep, const LabeledDataset& source,
                          const LabeledDataset& target_train, const LabeledDataset& target_test,
                          const PipelineConfig& cfg);

/// Full run. Throws Error(kBudgetExhausted) naming the round if the source
/// runs dry; run_pipeline_partial returns the truncated result instead.
PipelineResult run_pipeline(const LabeledDataset& source, const LabeledDataset& target_train,
                            const LabeledDataset& target_test, const PipelineConfig& cfg);
PipelineResult run_pipeline_partial(const LabeledDataset& source,
                                    const LabeledDataset& target_train,
                                    const LabeledDataset& target_test,
                                    const PipelineConfig& cfg);

struct SweepPoint {
  std::string variant;  // baseline | gws | gws_dr | random
  double x = 0.0;       // budget fraction or iteration
  double accuracy = 0.0;
  double separability = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double baseline_accuracy = 0.0;
  double source_heldout_accuracy = 0.0;
  std::vector<std::size_t> matched;
  std::vector<std::string> warnings;
  bool truncated = false;
};

/// Per-class budget for a fraction of the (smallest) target-train class size.
std::size_t budget_for_fraction(const LabeledDataset& target_train, double fraction);

SweepResult augmentation_sweep(const LabeledDataset& source, const LabeledDataset& target_train,
                               const LabeledDataset& target_test, const PipelineConfig& cfg,
                               const std::vector<double>& fractions, bool include_random);

SweepResult iteration_sweep(const LabeledDataset& source, const LabeledDataset& target_train,
                            const LabeledDataset& target_test, const PipelineConfig& cfg,
                            std::size_t max_iterations);

}  // namespace gwsdr
