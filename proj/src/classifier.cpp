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

#include "gwsdr/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "gwsdr/directional_regularizer.hpp"
#include "gwsdr/error.hpp"
#include "gwsdr/numeric_io.hpp"
#include "gwsdr/seeding.hpp"

namespace gwsdr {

namespace {

std::string shape_string(const std::vector<std::size_t>& sizes) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "," : "") + std::to_string(sizes[i]);
  return s;
}

// Column-major batch of pooled features plus labels.
struct Batch {
  Eigen::MatrixXd x;  // input_dim x B
  std::vector<std::size_t> labels;
};

Batch gather(const LabeledDataset& data, std::span<const std::size_t> idx) {
  Batch b;
  b.x.resize(static_cast<Eigen::Index>(data.feature_dim), static_cast<Eigen::Index>(idx.size()));
  b.labels.reserve(idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& s = data.samples[idx[c]];
    const auto f = pooled_features(data, s);
    b.x.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
    b.labels.push_back(s.label);
  }
  return b;
}

void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp();
    col /= col.sum();
  }
}

// Forward/backward over a batch. Writes the gradient of the summed CE into
// `grad` (flattened layout) and returns the summed CE.
double backprop(const ClassifierModel& model, const Batch& batch, std::vector<double>& grad) {
  const std::size_t n_layers = model.layers.size();
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(n_layers + 1);
  acts.push_back(batch.x);
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = model.layers[l].weights * acts.back();
    z.colwise() += model.layers[l].bias;
    if (l + 1 < n_layers) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  Eigen::MatrixXd& probs = acts.back();
  softmax_columns(probs);

  double loss = 0.0;
  Eigen::MatrixXd delta = probs;
  for (std::size_t c = 0; c < batch.labels.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    const auto row = static_cast<Eigen::Index>(batch.labels[c]);
    loss -= std::log(std::max(probs(row, col), 1e-300));
    delta(row, col) -= 1.0;
  }

  grad.assign(model.parameter_count(), 0.0);
  std::vector<std::size_t> offsets(n_layers);
  for (std::size_t l = 0, off = 0; l < n_layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(model.layers[l].weights.size() + model.layers[l].bias.size());
  }
  for (std::size_t l = n_layers; l-- > 0;) {
    const Eigen::MatrixXd gw = delta * acts[l].transpose();
    const Eigen::VectorXd gb = delta.rowwise().sum();
    double* out = grad.data() + offsets[l];
    for (Eigen::Index r = 0; r < gw.rows(); ++r)
      for (Eigen::Index c = 0; c < gw.cols(); ++c) *out++ = gw(r, c);
    for (Eigen::Index r = 0; r < gb.size(); ++r) *out++ = gb(r);
    if (l > 0) {
      Eigen::MatrixXd back = model.layers[l].weights.transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return loss;
}

void add_l2(const ClassifierModel& model, double l2, std::vector<double>& grad, double& penalty) {
  if (l2 == 0.0) return;
  std::size_t off = 0;
  double sq = 0.0;
  for (const auto& layer : model.layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        const double w = layer.weights(r, c);
        grad[off++] += l2 * w;
        sq += w * w;
      }
    off += static_cast<std::size_t>(layer.bias.size());
  }
  penalty = 0.5 * l2 * sq;
}

}  // namespace

// --- model ------------------------------------------------------------------

std::size_t ClassifierModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i)
    n += layer_sizes[i + 1] * layer_sizes[i] + layer_sizes[i + 1];
  return n;
}

std::vector<double> ClassifierModel::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) out.push_back(layer.weights(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out.push_back(layer.bias(r));
  }
  return out;
}

void ClassifierModel::assign(std::span<const double> params) {
  require(params.size() == parameter_count(), ErrorCode::kShapeMismatch,
          "parameter vector has " + std::to_string(params.size()) + " entries, model has " +
              std::to_string(parameter_count()));
  const double* p = params.data();
  for (auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = *p++;
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = *p++;
  }
}

void ClassifierModel::validate() const {
  require(layer_sizes.size() >= 2, ErrorCode::kInvalidArgument,
          "a model needs at least an input and an output layer");
  for (auto s : layer_sizes)
    require(s >= 1, ErrorCode::kInvalidArgument, "layer sizes must be positive");
  require(layers.size() + 1 == layer_sizes.size(), ErrorCode::kShapeMismatch,
          "layer count does not match layer_sizes");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto rows = static_cast<Eigen::Index>(layer_sizes[i + 1]);
    const auto cols = static_cast<Eigen::Index>(layer_sizes[i]);
    require(layers[i].weights.rows() == rows && layers[i].weights.cols() == cols &&
                layers[i].bias.size() == rows,
            ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " has the wrong shape");
  }
}

bool ClassifierModel::operator==(const ClassifierModel& other) const {
  return layer_sizes == other.layer_sizes && flatten() == other.flatten();
}

ClassifierModel init_model(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  require(layer_sizes.size() >= 2, ErrorCode::kInvalidArgument,
          "init_model needs at least two layer sizes");
  for (auto s : layer_sizes)
    require(s >= 1, ErrorCode::kInvalidArgument, "layer sizes must be positive");
  ClassifierModel m;
  m.layer_sizes = layer_sizes;
  m.rng_seed = seed;
  Rng rng = make_rng(seed, 0x696e6974);
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(layer_sizes[i]);
    const auto out = static_cast<Eigen::Index>(layer_sizes[i + 1]);
    // Glorot uniform.
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-a, a);
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = u(rng);
    layer.bias = Eigen::VectorXd::Zero(out);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

std::size_t argmax(const Eigen::VectorXd& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  return best;
}

ForwardResult forward(const ClassifierModel& model, std::span<const double> x) {
  require(x.size() == model.input_dim(), ErrorCode::kShapeMismatch,
          "input has dimension " + std::to_string(x.size()) + ", model expects " +
              std::to_string(model.input_dim()));
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  ForwardResult r;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (l + 1 == model.layers.size()) r.embedding = a;
    Eigen::VectorXd z = model.layers[l].weights * a + model.layers[l].bias;
    a = (l + 1 < model.layers.size()) ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  r.logits = a;
  r.probs = softmax(a);
  return r;
}

std::vector<double> predict_probs(const ClassifierModel& model, std::span<const double> x) {
  const auto p = forward(model, x).probs;
  return {p.data(), p.data() + p.size()};
}

void check_compatible(const ClassifierModel& model, const LabeledDataset& data) {
  require(data.feature_dim == model.input_dim(), ErrorCode::kShapeMismatch,
          "dataset feature_dim " + std::to_string(data.feature_dim) +
              " does not match model input " + std::to_string(model.input_dim()));
  require(data.num_classes() == model.num_classes(), ErrorCode::kShapeMismatch,
          "dataset has " + std::to_string(data.num_classes()) + " classes, model outputs " +
              std::to_string(model.num_classes()));
}

// --- training -------------------------------------------------------------

void TrainConfig::validate() const {
  require(epochs >= 1 && batch_size >= 1, ErrorCode::kInvalidArgument,
          "epochs and batch_size must be positive");
  require(learning_rate > 0.0, ErrorCode::kInvalidArgument, "learning_rate must be positive");
  require(l2_weight >= 0.0 && dr_weight >= 0.0, ErrorCode::kInvalidArgument,
          "loss weights must be non-negative");
  if (dr_weight > 0.0)
    require(dr_rank.has_value() && *dr_rank >= 1, ErrorCode::kInvalidArgument,
            "dr_weight > 0 requires a positive dr_rank");
}

TrainResult train(const ClassifierModel& model, const LabeledDataset& data,
                  const TrainConfig& cfg, const ClassifierModel* dr_ref) {
  cfg.validate();
  model.validate();
  data.validate();
  check_compatible(model, data);
  const bool use_dr = cfg.dr_weight > 0.0;
  Eigen::MatrixXd e_phi;
  if (use_dr) {
    require(dr_ref != nullptr, ErrorCode::kInvalidArgument,
            "dr_weight > 0 requires a reference model");
    require(dr_ref->layer_sizes == model.layer_sizes, ErrorCode::kShapeMismatch,
            "reference model has layers " + shape_string(dr_ref->layer_sizes) + ", expected " +
                shape_string(model.layer_sizes));
    const auto n = reshape_params(*dr_ref).matrix.rows();
    require(*cfg.dr_rank <= static_cast<std::size_t>(n), ErrorCode::kInvalidArgument,
            "dr_rank exceeds the reshaped matrix size " + std::to_string(n));
    e_phi = significant_eigvecs(reshape_params(*dr_ref).matrix, *cfg.dr_rank);
  }

  TrainResult result{model, {}, 0.0};
  ClassifierModel& theta = result.model;
  auto params = theta.flatten();
  if (use_dr) result.initial_dr_loss = aligned_frobenius_loss(
      significant_eigvecs(reshape_flat(params).matrix, *cfg.dr_rank), e_phi);

  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(cfg.seed, 0x7472616e);
  std::vector<double> grad;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.min_eigengap = std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto batch = gather(data, std::span(order).subspan(start, end - start));
      const double ce = backprop(theta, batch, grad);
      double penalty = 0.0;
      add_l2(theta, cfg.l2_weight, grad, penalty);
      double dr = 0.0;
      if (use_dr) {
        try {
          const auto g = dr_grad_flat(params, e_phi);
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.dr_weight * g.gradient[i];
          dr = g.loss;
          stats.min_eigengap = std::min(stats.min_eigengap, g.eigengap);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateSpectrum) throw;
          ++stats.dr_skipped;
          stats.min_eigengap = 0.0;
        }
      }
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
      theta.assign(params);
      stats.cross_entropy += ce;
      stats.dr_loss += dr;
      stats.total_loss += ce + penalty + cfg.dr_weight * dr;
      ++steps;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    stats.cross_entropy *= inv;
    stats.dr_loss *= inv;
    stats.total_loss *= inv;
    if (use_dr) {
      const auto eig = sorted_symmetric_eigen(reshape_flat(params).matrix);
      const auto keep = std::min<Eigen::Index>(eig.values.size(),
                                               static_cast<Eigen::Index>(*cfg.dr_rank) + 1);
      stats.spectrum.assign(eig.values.data(), eig.values.data() + keep);
    } else {
      stats.min_eigengap = 0.0;
    }
    result.epochs.push_back(stats);
  }
  return result;
}

double cross_entropy(const ClassifierModel& model, const LabeledDataset& data) {
  double loss = 0.0;
  cross_entropy_gradient(model, data, &loss);
  return loss;
}

std::vector<double> cross_entropy_gradient(const ClassifierModel& model,
                                           const LabeledDataset& data, double* loss) {
  model.validate();
  require(!data.samples.empty(), ErrorCode::kInvalidArgument, "empty dataset");
  check_compatible(model, data);
  std::vector<std::size_t> idx(data.samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> grad;
  const double l = backprop(model, gather(data, idx), grad);
  if (loss) *loss = l;
  return grad;
}

// --- evaluation -----------------------------------------------------------

Evaluation evaluate(const ClassifierModel& model, const LabeledDataset& data) {
  check_compatible(model, data);
  require(!data.samples.empty(), ErrorCode::kInvalidArgument, "cannot evaluate on no samples");
  const std::size_t c = model.num_classes();
  Evaluation ev;
  ev.confusion.assign(c, std::vector<std::size_t>(c, 0));
  std::size_t correct = 0;
  for (const auto& s : data.samples) {
    const auto pred = argmax(forward(model, pooled_features(data, s)).probs);
    ++ev.confusion[s.label][pred];
    if (pred == s.label) ++correct;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.samples.size());
  return ev;
}

std::vector<Embedding> embed_dataset(const ClassifierModel& model, const LabeledDataset& data) {
  require(data.feature_dim == model.input_dim(), ErrorCode::kShapeMismatch,
          "dataset feature_dim does not match model input");
  std::vector<Embedding> out;
  out.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    const auto e = forward(model, pooled_features(data, s)).embedding;
    out.push_back({std::vector<double>(e.data(), e.data() + e.size()), s.label});
  }
  return out;
}

double separability_score(std::span<const Embedding> embeddings) {
  std::size_t n_labels = 0;
  for (const auto& e : embeddings) n_labels = std::max(n_labels, e.label + 1);
  std::vector<std::size_t> sizes(n_labels, 0);
  for (const auto& e : embeddings) ++sizes[e.label];
  std::size_t populated = 0;
  for (auto s : sizes) {
    if (s == 0) continue;
    require(s >= 2, ErrorCode::kInvalidArgument,
            "separability needs at least 2 samples in every class");
    ++populated;
  }
  require(populated >= 2, ErrorCode::kInvalidArgument, "separability needs at least 2 classes");

  const std::size_t n = embeddings.size();
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(embeddings.front().vector.size()),
                      static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    require(embeddings[i].vector.size() == static_cast<std::size_t>(pts.rows()),
            ErrorCode::kShapeMismatch, "embeddings have mixed dimensions");
    pts.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(
        embeddings[i].vector.data(), pts.rows());
  }

  double total = 0.0;
  std::vector<double> sum_to(n_labels);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum_to[embeddings[j].label] +=
          (pts.col(static_cast<Eigen::Index>(i)) - pts.col(static_cast<Eigen::Index>(j))).norm();
    }
    const std::size_t own = embeddings[i].label;
    const double a = sum_to[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_labels; ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, sum_to[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

// --- serialization --------------------------------------------------------

std::string serialize_model(const ClassifierModel& model) {
  model.validate();
  std::ostringstream os;
  os << "layers: " << shape_string(model.layer_sizes) << '\n';
  os << "seed: " << model.rng_seed << '\n';
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    os << "weights " << l << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        os << (c ? "," : "") << format_real(layer.weights(r, c));
      os << '\n';
    }
    os << "bias " << l << '\n';
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      os << (r ? "," : "") << format_real(layer.bias(r));
    os << '\n';
  }
  return os.str();
}

ClassifierModel parse_model(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t row = 0;
  auto next = [&](const std::string& what) -> std::string {
    if (!std::getline(is, line))
      fail(ErrorCode::kParse, "model: unexpected end of file, expected " + what);
    ++row;
    return std::string(trim(line));
  };
  auto bad = [&](const std::string& what) {
    fail(ErrorCode::kParse, "model row " + std::to_string(row) + ": " + what);
  };
  auto real_row = [&](const std::string& what, std::size_t count) {
    const auto body = next(what);
    auto parts = split(body, ',');
    if (parts.size() != count)
      bad("expected " + std::to_string(count) + " values, got " + std::to_string(parts.size()));
    std::vector<double> v;
    try {
      for (auto p : parts) v.push_back(parse_real(p));
    } catch (const Error& e) {
      bad(e.what());
    }
    return v;
  };

  auto header = next("'layers:' header");
  if (header.rfind("layers:", 0) != 0) bad("expected 'layers: d,h,C'");
  std::vector<long long> raw_sizes;
  try {
    for (auto p : split(trim(std::string_view(header).substr(7)), ','))
      raw_sizes.push_back(parse_int(p));
  } catch (const Error& e) {
    bad(e.what());
  }
  std::vector<std::size_t> sizes;
  for (auto v : raw_sizes) {
    if (v <= 0) bad("layer sizes must be positive");
    sizes.push_back(static_cast<std::size_t>(v));
  }
  if (sizes.size() < 2) bad("need at least two layer sizes");
  ClassifierModel m = init_model(sizes, 0);
  auto seed_line = next("'seed:' line");
  if (seed_line.rfind("seed:", 0) != 0) bad("expected 'seed: n'");
  try {
    m.rng_seed = static_cast<std::uint64_t>(parse_int(std::string_view(seed_line).substr(5)));
  } catch (const Error& e) {
    bad(e.what());
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& layer = m.layers[l];
    if (next("weights block") != "weights " + std::to_string(l))
      bad("expected 'weights " + std::to_string(l) + "'");
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      const auto v = real_row("weight row", static_cast<std::size_t>(layer.weights.cols()));
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        layer.weights(r, c) = v[static_cast<std::size_t>(c)];
    }
    if (next("bias block") != "bias " + std::to_string(l))
      bad("expected 'bias " + std::to_string(l) + "'");
    const auto v = real_row("bias row", static_cast<std::size_t>(layer.bias.size()));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = v[static_cast<std::size_t>(r)];
  }
  return m;
}

void write_model(const ClassifierModel& model, const std::filesystem::path& path) {
  const auto text = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_model(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace gwsdr
