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

// Posterior-likelihood matching of target classes to source classes under a
// classifier trained on the target data, plus the helpers that turn a match
// into augmentation data.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gwsdr/classifier.hpp"
#include "gwsdr/dataset.hpp"

namespace gwsdr {

/// Probabilities are clamped to this before taking logs.
inline constexpr double kMinProbability = 1e-300;
/// Upper bound on samples per source class used by the automatic choice of l.
inline constexpr std::size_t kMaxAutoMatchSamples = 64;

enum class MatchMethod { kLikelihood, kCount };

std::string to_string(MatchMethod m);
MatchMethod parse_match_method(const std::string& s);

struct MatchScore {
  std::size_t target_class = 0;
  std::size_t source_class = 0;
  double log_likelihood = 0.0;   // sum_j log P(y = q | x_j)
  std::size_t argmax_count = 0;  // #{j : argmax P(y | x_j) = q}
  std::size_t samples_used = 0;
  double mean_target_prob = 0.0;
};

struct ModeMatchReport {
  MatchMethod method = MatchMethod::kCount;
  /// ranked[q] lists every source class, best first.
  std::vector<std::vector<MatchScore>> ranked;
  std::vector<std::size_t> matched;
  std::vector<std::string> target_names;
  std::vector<std::string> source_names;
  std::vector<std::string> warnings;
};

struct MatchConfig {
  /// l; 0 picks min(smallest source class, kMaxAutoMatchSamples).
  std::size_t samples_per_class = 0;
  MatchMethod method = MatchMethod::kCount;
  std::uint64_t seed = 0;
};

/// Sum of clamped log-probabilities.
double class_log_likelihood(std::span<const double> target_probs);
double class_log_likelihood(const ClassifierModel& model,
                            std::span<const std::vector<double>> source_features,
                            std::size_t target_class);

/// Scores one (target q, source p) pair from that source class's samples.
MatchScore score_pair(const std::vector<std::vector<double>>& probs, std::size_t target_class,
                      std::size_t source_class);

/// True when `a` ranks ahead of `b` under `method`. Count: count, then mean
/// probability, then lower index. Likelihood: log-likelihood, then lower index.
bool ranks_before(const MatchScore& a, const MatchScore& b, MatchMethod method);

ModeMatchReport match_modes(const ClassifierModel& model, const LabeledDataset& source,
                            std::size_t target_class_count, const MatchConfig& cfg);

std::size_t second_best(const ModeMatchReport& report, std::size_t target_class);
/// Rank-2 source class for every target class.
std::vector<std::size_t> second_best_map(const ModeMatchReport& report);

/// Table with columns target_class,rank,source_class,log_likelihood,argmax_count,mean_prob.
std::string format_report(const ModeMatchReport& report);
void write_report(const ModeMatchReport& report, const std::filesystem::path& path);

std::vector<std::size_t> candidate_offsets(std::size_t length, std::size_t window,
                                           std::size_t stride);

struct TrimResult {
  std::size_t offset = 0;
  double score = 0.0;  // P(y = q | pooled window)
  std::vector<double> frames;  // window * dim values
};

/// Window of `window` frames maximizing the target-class probability of its
/// mean-pooled features. Earliest offset wins ties.
TrimResult trim_sequence(const ClassifierModel& model, std::span<const double> sequence,
                         std::size_t dim, std::size_t target_class, std::size_t window,
                         std::size_t stride);

struct RelabeledSet {
  LabeledDataset data;                  // target class names
  std::vector<std::size_t> source_ids;  // parallel to data.samples
};

/// Draws `per_class_budget` unused samples of source class class_map[q] for every
/// target class q and labels them q. Ids in `exclude`, and ids already drawn
/// earlier in the same call, are never reused.
RelabeledSet relabel_matched(const LabeledDataset& source,
                             std::span<const std::size_t> class_map,
                             const std::vector<std::string>& target_names,
                             std::size_t per_class_budget,
                             const std::set<std::size_t>& exclude, std::uint64_t seed);

RelabeledSet relabel_matched(const LabeledDataset& source, const ModeMatchReport& report,
                             std::size_t per_class_budget,
                             const std::set<std::size_t>& exclude, std::uint64_t seed);

}  // namespace gwsdr
