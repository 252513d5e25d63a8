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

// Declarative run configs and the artifact writers behind the pipeline and
// sweep commands.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gwsdr/dataset.hpp"
#include "gwsdr/pipeline.hpp"

namespace gwsdr {

struct DataConfig {
  // Either all three paths are set, or the benchmark is generated per seed.
  std::optional<std::filesystem::path> source;
  std::optional<std::filesystem::path> target_train;
  std::optional<std::filesystem::path> target_test;

  SyntheticSpec generate;  // samples_per_target_class and seed are ignored
  std::size_t target_train_per_class = 3;
  std::size_t target_test_per_class = 100;
  /// Replace the generated source by planted-span sequences.
  std::optional<SequenceSpec> source_sequences;

  bool from_files() const { return source.has_value(); }
};

struct ExperimentConfig {
  DataConfig data;
  PipelineConfig pipeline;  // seeds inside are derived per replicate
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> fractions{0.25, 0.5, 1.0, 2.0, 4.0};
  std::size_t max_iterations = 3;
  bool include_random = true;
  std::size_t workers = 1;

  void validate() const;
};

/// `key = value` lines; '#' starts a comment. Relative data paths resolve
/// against base_dir.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical text form; parsing it back gives an identical config.
std::string serialize_experiment_config(const ExperimentConfig& cfg);

struct ReplicateData {
  LabeledDataset source;
  LabeledDataset target_train;
  LabeledDataset target_test;
  std::vector<std::size_t> ground_truth_map;  // empty for file data
};

ReplicateData replicate_data(const ExperimentConfig& cfg, std::uint64_t seed);
/// Pipeline config with every training/matching seed derived from `seed`.
PipelineConfig replicate_pipeline_config(const ExperimentConfig& cfg, std::uint64_t seed);

struct RunSummary {
  std::vector<std::filesystem::path> written;
  bool truncated = false;
  std::vector<std::string> warnings;
};

// Each writes <verb>.json, <verb>.csv and <verb>.config under out_dir.
// The pipeline also writes per-seed models and match tables under models/.
RunSummary run_pipeline_experiment(const ExperimentConfig& cfg,
                                   const std::filesystem::path& out_dir);
RunSummary run_augment_experiment(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir);
RunSummary run_iterate_experiment(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir);

inline constexpr const char* kSweepCsvHeader = "variant,fraction_or_iter,seed,accuracy,separability";

}  // namespace gwsdr
