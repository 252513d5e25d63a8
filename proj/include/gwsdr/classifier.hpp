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

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwsdr/dataset.hpp"

namespace gwsdr {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Feed-forward softmax classifier: tanh hidden layers, linear output,
/// softmax on top. layer_sizes = {input_dim, hidden..., num_classes}.
struct ClassifierModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<DenseLayer> layers;
  std::uint64_t rng_seed = 0;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t embedding_dim() const { return layer_sizes[layer_sizes.size() - 2]; }
  std::size_t parameter_count() const;

  /// Layer by layer: weights row-major, then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);

  void validate() const;
  bool operator==(const ClassifierModel& other) const;
};

ClassifierModel init_model(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

struct ForwardResult {
  Eigen::VectorXd probs;
  Eigen::VectorXd embedding;  // penultimate activation
  Eigen::VectorXd logits;
};

ForwardResult forward(const ClassifierModel& model, std::span<const double> x);
std::vector<double> predict_probs(const ClassifierModel& model, std::span<const double> x);
/// argmax with ties broken by the lowest index.
std::size_t argmax(const Eigen::VectorXd& v);

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  double learning_rate = 0.01;
  double l2_weight = 0.0;
  /// Weight of the directional term; 0 disables it.
  double dr_weight = 0.0;
  std::optional<std::size_t> dr_rank = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  double total_loss = 0.0;
  double cross_entropy = 0.0;
  double dr_loss = 0.0;
  std::size_t dr_skipped = 0;  // steps whose DR term was dropped for a degenerate spectrum
  double min_eigengap = 0.0;   // smallest gap seen this epoch (DR runs only)
  /// Leading k+1 eigenvalues (by magnitude) of the reshaped parameters at
  /// epoch end. DR runs only.
  std::vector<double> spectrum;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<EpochStats> epochs;
  /// DR loss of the starting parameters against dr_ref (0 when DR is off).
  double initial_dr_loss = 0.0;
};

/// Mini-batch SGD. Each step minimizes the batch's summed cross-entropy
/// + l2/2 |W|^2 + dr_weight * DR(theta, dr_ref). Batch order is a pure
/// function of cfg.seed.
TrainResult train(const ClassifierModel& model, const LabeledDataset& data,
                  const TrainConfig& cfg, const ClassifierModel* dr_ref = nullptr);

/// Cross-entropy summed over every sample of `data`.
double cross_entropy(const ClassifierModel& model, const LabeledDataset& data);

/// Gradient of the summed cross-entropy over `data`, flattened like
/// ClassifierModel::flatten(). Returns the loss through `loss`.
std::vector<double> cross_entropy_gradient(const ClassifierModel& model,
                                           const LabeledDataset& data, double* loss = nullptr);

struct Evaluation {
  double accuracy = 0.0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
};

Evaluation evaluate(const ClassifierModel& model, const LabeledDataset& data);

struct Embedding {
  std::vector<double> vector;
  std::size_t label = 0;
};

std::vector<Embedding> embed_dataset(const ClassifierModel& model, const LabeledDataset& data);

/// Mean silhouette coefficient under Euclidean distance. Returns 0 when every
/// point coincides.
double separability_score(std::span<const Embedding> embeddings);

std::string serialize_model(const ClassifierModel& model);
ClassifierModel parse_model(const std::string& text);
void write_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

/// Throws kShapeMismatch unless the model consumes `data` and emits one
/// probability per class.
void check_compatible(const ClassifierModel& model, const LabeledDataset& data);

}  // namespace gwsdr
