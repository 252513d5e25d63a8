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

// Acceptance checks: numerical oracles run in-process, artifact checks read
// the CSV/JSON a full run leaves in one output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gwsdr {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

/// "PASS [id] name: detail" / "FAIL [id] name: detail".
std::string format_result(const CriterionResult& r);

struct SweepRow {
  std::string variant;
  double x = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double separability = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;

  /// Mean over seeds; nullopt if the cell is absent.
  std::optional<double> mean_accuracy(const std::string& variant, double x) const;
  std::optional<double> mean_separability(const std::string& variant, double x) const;
  std::size_t seed_count(const std::string& variant, double x) const;
};

SweepTable parse_sweep_csv(const std::string& text);
SweepTable load_sweep_csv(const std::filesystem::path& path);

inline constexpr std::size_t kRequiredSeeds = 10;

CriterionResult check_dr_gradient();
CriterionResult check_dr_identities();
CriterionResult check_likelihood_oracle();
CriterionResult check_mode_recovery();
CriterionResult check_ordering(const SweepTable& augment);
CriterionResult check_inverted_u(const SweepTable& augment);
CriterionResult check_random_control(const SweepTable& augment);
CriterionResult check_separability(const SweepTable& augment);
/// Reads the per-seed baseline and source held-out accuracies from augment.json.
CriterionResult check_source_generalization(const std::filesystem::path& augment_json);
CriterionResult check_trimming();
/// Reruns each <verb>.config found in out_dir and compares outputs byte for byte.
CriterionResult check_determinism(const std::filesystem::path& out_dir);

/// All criteria in order. Artifact criteria fail with the file name when an
/// artifact is missing.
std::vector<CriterionResult> run_acceptance(const std::filesystem::path& out_dir);

}  // namespace gwsdr
