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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gwsdr {

/// One labeled example. `values` holds either a flat feature vector of
/// length feature_dim or a row-major sequence of sequence_length frames.
struct Sample {
  std::vector<double> values;
  std::size_t label = 0;

  bool operator==(const Sample&) const = default;
};

/// Named classes plus fixed-dimension samples.
///
/// Invariants (checked by validate()): every label indexes class_names, all
/// samples share the same shape, and every class owns at least one sample.
struct LabeledDataset {
  std::vector<std::string> class_names;
  std::size_t feature_dim = 0;
  std::optional<std::size_t> sequence_length;
  std::vector<Sample> samples;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t values_per_sample() const {
    return feature_dim * sequence_length.value_or(1);
  }
  bool is_sequence() const { return sequence_length.has_value(); }

  void validate() const;
  std::vector<std::size_t> class_counts() const;
  /// Sample indices grouped by label, in dataset order.
  std::vector<std::vector<std::size_t>> indices_by_class() const;

  bool operator==(const LabeledDataset&) const = default;
};

/// Mean over time for sequence samples; identity for flat ones.
std::vector<double> pooled_features(const LabeledDataset& ds, const Sample& s);
std::vector<double> mean_pool(std::span<const double> frames, std::size_t dim);

struct SyntheticSpec {
  std::size_t num_source_classes = 8;
  std::size_t num_target_classes = 8;
  std::size_t feature_dim = 4;
  std::size_t samples_per_source_class = 100;
  std::size_t samples_per_target_class = 10;
  double class_separation = 10.0;
  double target_perturbation = 1.0;
  double noise_scale = 0.5;
  /// When set, every target class is displaced along one common seeded
  /// direction (a dataset-wide shift) instead of an independent one.
  bool shared_perturbation = false;
  /// Class means and target displacements occupy the first signal_dim
  /// coordinates (0 = all of them); the rest carry noise only.
  std::size_t signal_dim = 0;
  /// Target class index -> source class index. Empty means identity on the
  /// first M source classes.
  std::vector<std::size_t> ground_truth_map;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<std::size_t> resolved_map() const;
};

struct SyntheticBenchmark {
  LabeledDataset source;
  LabeledDataset target;
  std::vector<std::vector<double>> source_means;
  std::vector<std::vector<double>> target_means;
  std::vector<std::size_t> ground_truth_map;
};

/// Seeded isotropic Gaussian classes. Source means are placed by rejection
/// sampling with pairwise distance >= class_separation; target class q sits
/// at distance exactly target_perturbation from its mate's mean.
SyntheticBenchmark generate_synthetic(const SyntheticSpec& spec);

/// Seeded class means with pairwise distance >= separation.
std::vector<std::vector<double>> place_class_means(std::size_t count, std::size_t dim,
                                                   double separation,
                                                   std::uint64_t seed,
                                                   std::size_t signal_dim = 0);

struct SequenceSpec {
  std::size_t sequence_length = 16;
  std::size_t span_length = 4;
  /// The active span starts at a multiple of this (1 = anywhere).
  std::size_t span_alignment = 1;
  std::size_t samples_per_class = 10;
  double noise_scale = 0.5;
  std::uint64_t seed = 0;
};

struct SequenceDataset {
  LabeledDataset data;
  std::vector<std::size_t> span_offsets;  // parallel to data.samples
};

/// Zero-mean noise sequences, each with one planted span of per-class signal
/// (class mean + noise) at a seeded offset.
SequenceDataset generate_sequences(const std::vector<std::vector<double>>& class_means,
                                   const std::vector<std::string>& class_names,
                                   const SequenceSpec& spec);

LabeledDataset load_dataset(const std::filesystem::path& path);
void write_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
std::string serialize_dataset(const LabeledDataset& ds);
LabeledDataset parse_dataset(const std::string& text);

/// Stratified split: train keeps ceil(fraction * n_c) of each class (capped
/// at n_c - 1 so the test side never loses a class).
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        double fraction,
                                                        std::uint64_t seed);

/// Same class names and shape, no samples. Not valid until filled.
LabeledDataset empty_like(const LabeledDataset& ds);

}  // namespace gwsdr
