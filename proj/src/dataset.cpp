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

#include "gwsdr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gwsdr/error.hpp"
#include "gwsdr/numeric_io.hpp"
#include "gwsdr/seeding.hpp"

namespace gwsdr {

namespace {

constexpr int kMeanPlacementAttempts = 1000;

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

std::vector<double> unit_vector(Rng& rng, std::size_t dim) {
  while (true) {
    auto v = gaussian_vector(rng, dim, 1.0);
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-12) continue;
    for (auto& x : v) x /= norm;
    return v;
  }
}

LabeledDataset draw_classes(const std::vector<std::vector<double>>& means,
                            std::vector<std::string> names, std::size_t per_class,
                            double noise, Rng& rng) {
  LabeledDataset ds;
  ds.class_names = std::move(names);
  ds.feature_dim = means.front().size();
  std::normal_distribution<double> n(0.0, noise);
  for (std::size_t c = 0; c < means.size(); ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Sample s;
      s.label = c;
      s.values = means[c];
      for (auto& x : s.values) x += n(rng);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

std::vector<std::string> numbered_names(const std::string& prefix, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

[[noreturn]] void parse_fail(std::size_t row, const std::string& what) {
  fail(ErrorCode::kParse, "row " + std::to_string(row) + ": " + what);
}

long long int_at(std::size_t row, std::string_view text) {
  try {
    return parse_int(text);
  } catch (const Error& e) {
    parse_fail(row, e.what());
  }
}

double real_at(std::size_t row, std::string_view text) {
  try {
    return parse_real(text);
  } catch (const Error& e) {
    parse_fail(row, e.what());
  }
}

}  // namespace

void LabeledDataset::validate() const {
  require(!class_names.empty(), ErrorCode::kInvalidArgument, "dataset has no classes");
  require(feature_dim > 0, ErrorCode::kInvalidArgument, "feature_dim must be positive");
  if (sequence_length)
    require(*sequence_length > 0, ErrorCode::kInvalidArgument,
            "sequence_length must be positive");
  for (const auto& name : class_names)
    require(!name.empty() && name.find_first_of(",\n\r|") == std::string::npos,
            ErrorCode::kInvalidArgument, "invalid class name '" + name + "'");
  const std::size_t width = values_per_sample();
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    require(s.label < class_names.size(), ErrorCode::kInvalidArgument,
            "sample " + std::to_string(i) + " has unknown label " + std::to_string(s.label));
    require(s.values.size() == width, ErrorCode::kShapeMismatch,
            "sample " + std::to_string(i) + " has " + std::to_string(s.values.size()) +
                " values, expected " + std::to_string(width));
    ++counts[s.label];
  }
  for (std::size_t c = 0; c < counts.size(); ++c)
    require(counts[c] > 0, ErrorCode::kInvalidArgument,
            "class '" + class_names[c] + "' has no samples");
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& s : samples)
    if (s.label < counts.size()) ++counts[s.label];
  return counts;
}

std::vector<std::vector<std::size_t>> LabeledDataset::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(class_names.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[samples[i].label].push_back(i);
  return out;
}

std::vector<double> mean_pool(std::span<const double> frames, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  const std::size_t t = frames.size() / dim;
  for (std::size_t f = 0; f < t; ++f)
    for (std::size_t j = 0; j < dim; ++j) out[j] += frames[f * dim + j];
  for (auto& x : out) x /= static_cast<double>(t);
  return out;
}

std::vector<double> pooled_features(const LabeledDataset& ds, const Sample& s) {
  if (!ds.is_sequence()) return s.values;
  return mean_pool(s.values, ds.feature_dim);
}

LabeledDataset empty_like(const LabeledDataset& ds) {
  LabeledDataset out;
  out.class_names = ds.class_names;
  out.feature_dim = ds.feature_dim;
  out.sequence_length = ds.sequence_length;
  return out;
}

// --- synthetic generation ---------------------------------------------------

void SyntheticSpec::validate() const {
  require(num_source_classes >= 1 && num_target_classes >= 1, ErrorCode::kInvalidArgument,
          "class counts must be positive");
  require(num_target_classes <= num_source_classes, ErrorCode::kInvalidArgument,
          "num_target_classes (M) must not exceed num_source_classes (N)");
  require(feature_dim >= 1, ErrorCode::kInvalidArgument, "feature_dim must be positive");
  require(samples_per_source_class >= 1 && samples_per_target_class >= 1,
          ErrorCode::kInvalidArgument, "samples per class must be positive");
  require(class_separation > 0.0, ErrorCode::kInvalidArgument,
          "class_separation must be positive");
  require(noise_scale > 0.0, ErrorCode::kInvalidArgument, "noise_scale must be positive");
  require(target_perturbation >= 0.0, ErrorCode::kInvalidArgument,
          "target_perturbation must be non-negative");
  require(target_perturbation < class_separation / 2.0, ErrorCode::kInvalidArgument,
          "target_perturbation must be < class_separation / 2");
  const auto map = resolved_map();
  require(map.size() == num_target_classes, ErrorCode::kInvalidArgument,
          "ground_truth_map must have one entry per target class");
  for (auto p : map)
    require(p < num_source_classes, ErrorCode::kInvalidArgument,
            "ground_truth_map entry " + std::to_string(p) + " is not a source class");
}

std::vector<std::size_t> SyntheticSpec::resolved_map() const {
  if (!ground_truth_map.empty()) return ground_truth_map;
  std::vector<std::size_t> map(num_target_classes);
  std::iota(map.begin(), map.end(), std::size_t{0});
  return map;
}

std::vector<std::vector<double>> place_class_means(std::size_t count, std::size_t dim,
                                                   double separation,
                                                   std::uint64_t seed,
                                                   std::size_t signal_dim) {
  const std::size_t active = (signal_dim == 0 || signal_dim > dim) ? dim : signal_dim;
  Rng rng = make_rng(seed, 0x6d65616e);
  // Typical pairwise distance of N(0, s^2 I) draws is s * sqrt(2 * dim).
  double scale = 1.5 * separation / std::sqrt(2.0 * static_cast<double>(active));
  std::vector<std::vector<double>> means;
  while (means.size() < count) {
    bool placed = false;
    for (int attempt = 0; attempt < kMeanPlacementAttempts && !placed; ++attempt) {
      auto cand = gaussian_vector(rng, active, scale);
      cand.resize(dim, 0.0);
      placed = std::all_of(means.begin(), means.end(), [&](const auto& m) {
        return distance(m, cand) >= separation;
      });
      if (placed) means.push_back(std::move(cand));
    }
    if (!placed) scale *= 1.1;
  }
  return means;
}

SyntheticBenchmark generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticBenchmark out;
  out.ground_truth_map = spec.resolved_map();
  out.source_means = place_class_means(spec.num_source_classes, spec.feature_dim,
                                       spec.class_separation, spec.seed, spec.signal_dim);
  const std::size_t active =
      (spec.signal_dim == 0 || spec.signal_dim > spec.feature_dim) ? spec.feature_dim
                                                                   : spec.signal_dim;
  Rng rng = make_rng(spec.seed, 0x74617267);
  auto displacement = [&] {
    auto v = unit_vector(rng, active);
    v.resize(spec.feature_dim, 0.0);
    return v;
  };
  const auto shared_dir = displacement();
  for (std::size_t q = 0; q < spec.num_target_classes; ++q) {
    auto m = out.source_means[out.ground_truth_map[q]];
    if (spec.target_perturbation > 0.0) {
      const auto dir = spec.shared_perturbation ? shared_dir : displacement();
      for (std::size_t j = 0; j < m.size(); ++j) m[j] += spec.target_perturbation * dir[j];
    }
    out.target_means.push_back(std::move(m));
  }
  Rng src_rng = make_rng(spec.seed, 0x73726373);
  out.source = draw_classes(out.source_means, numbered_names("src", spec.num_source_classes),
                            spec.samples_per_source_class, spec.noise_scale, src_rng);
  Rng tgt_rng = make_rng(spec.seed, 0x74677473);
  out.target = draw_classes(out.target_means, numbered_names("tgt", spec.num_target_classes),
                            spec.samples_per_target_class, spec.noise_scale, tgt_rng);
  return out;
}

SequenceDataset generate_sequences(const std::vector<std::vector<double>>& class_means,
                                   const std::vector<std::string>& class_names,
                                   const SequenceSpec& spec) {
  require(!class_means.empty() && class_means.size() == class_names.size(),
          ErrorCode::kInvalidArgument, "one class name per class mean required");
  require(spec.span_length >= 1 && spec.span_length <= spec.sequence_length,
          ErrorCode::kInvalidArgument, "span_length must be in [1, sequence_length]");
  require(spec.span_alignment >= 1, ErrorCode::kInvalidArgument,
          "span_alignment must be positive");
  require(spec.samples_per_class >= 1, ErrorCode::kInvalidArgument,
          "samples_per_class must be positive");
  const std::size_t dim = class_means.front().size();
  const std::size_t last_start = spec.sequence_length - spec.span_length;
  const std::size_t slots = last_start / spec.span_alignment + 1;

  SequenceDataset out;
  out.data.class_names = class_names;
  out.data.feature_dim = dim;
  out.data.sequence_length = spec.sequence_length;
  Rng rng = make_rng(spec.seed, 0x73657173);
  std::normal_distribution<double> noise(0.0, spec.noise_scale);
  std::uniform_int_distribution<std::size_t> slot(0, slots - 1);
  for (std::size_t c = 0; c < class_means.size(); ++c) {
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      const std::size_t offset = slot(rng) * spec.span_alignment;
      Sample s;
      s.label = c;
      s.values.resize(spec.sequence_length * dim);
      for (std::size_t t = 0; t < spec.sequence_length; ++t) {
        const bool active = t >= offset && t < offset + spec.span_length;
        for (std::size_t j = 0; j < dim; ++j)
          s.values[t * dim + j] = (active ? class_means[c][j] : 0.0) + noise(rng);
      }
      out.data.samples.push_back(std::move(s));
      out.span_offsets.push_back(offset);
    }
  }
  return out;
}

// --- file I/O -----------------------------------------------------------------

std::string serialize_dataset(const LabeledDataset& ds) {
  ds.validate();
  std::ostringstream os;
  os << "classes: ";
  for (std::size_t c = 0; c < ds.class_names.size(); ++c)
    os << (c ? "," : "") << ds.class_names[c];
  os << "\ndim: " << ds.feature_dim;
  if (ds.sequence_length) os << " seqlen: " << *ds.sequence_length;
  os << '\n';
  const std::size_t frames = ds.sequence_length.value_or(1);
  for (const auto& s : ds.samples) {
    os << s.label << '|';
    for (std::size_t t = 0; t < frames; ++t) {
      if (ds.sequence_length) os << (t ? ";" : "") << 't' << t << ':';
      for (std::size_t j = 0; j < ds.feature_dim; ++j)
        os << (j ? "," : "") << format_real(s.values[t * ds.feature_dim + j]);
    }
    os << '\n';
  }
  return os.str();
}

LabeledDataset parse_dataset(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  LabeledDataset ds;

  if (!std::getline(is, line) || trim(line).substr(0, 8) != "classes:")
    parse_fail(1, "expected header 'classes: name0,name1,...'");
  for (auto name : split(trim(trim(line).substr(8)), ','))
    ds.class_names.emplace_back(trim(name));
  if (ds.class_names.empty() || ds.class_names.front().empty())
    parse_fail(1, "no class names");

  if (!std::getline(is, line)) parse_fail(2, "expected 'dim: d'");
  {
    std::istringstream hs(line);
    std::string key, value;
    bool have_dim = false;
    while (hs >> key) {
      if (!(hs >> value)) parse_fail(2, "missing value for '" + key + "'");
      const auto v = int_at(2, value);
      if (v <= 0) parse_fail(2, key + " must be positive");
      if (key == "dim:") {
        ds.feature_dim = static_cast<std::size_t>(v);
        have_dim = true;
      } else if (key == "seqlen:") {
        ds.sequence_length = static_cast<std::size_t>(v);
      } else {
        parse_fail(2, "unknown header key '" + key + "'");
      }
    }
    if (!have_dim) parse_fail(2, "expected 'dim: d'");
  }

  const std::size_t frames = ds.sequence_length.value_or(1);
  std::size_t row = 2;
  while (std::getline(is, line)) {
    ++row;
    auto body = trim(line);
    if (body.empty()) continue;
    auto bar = body.find('|');
    if (bar == std::string_view::npos) parse_fail(row, "expected 'label|values'");
    Sample s;
    const auto label = int_at(row, body.substr(0, bar));
    if (label < 0) parse_fail(row, "negative label");
    s.label = static_cast<std::size_t>(label);
    if (s.label >= ds.class_names.size())
      parse_fail(row, "unknown label " + std::to_string(s.label) + " (have " +
                          std::to_string(ds.class_names.size()) + " classes)");
    auto payload = body.substr(bar + 1);
    auto frame_texts = ds.sequence_length ? split(payload, ';')
                                          : std::vector<std::string_view>{payload};
    if (frame_texts.size() != frames)
      parse_fail(row, "dimension mismatch: expected " + std::to_string(frames) +
                          " frames, got " + std::to_string(frame_texts.size()));
    for (std::size_t t = 0; t < frames; ++t) {
      auto ft = trim(frame_texts[t]);
      if (ds.sequence_length) {
        auto colon = ft.find(':');
        if (colon == std::string_view::npos || ft.substr(0, colon) != "t" + std::to_string(t))
          parse_fail(row, "expected frame prefix 't" + std::to_string(t) + ":'");
        ft = ft.substr(colon + 1);
      }
      auto parts = split(ft, ',');
      if (parts.size() != ds.feature_dim)
        parse_fail(row, "dimension mismatch: expected " + std::to_string(ds.feature_dim) +
                            " values, got " + std::to_string(parts.size()));
      for (auto p : parts) s.values.push_back(real_at(row, p));
    }
    ds.samples.push_back(std::move(s));
  }

  auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0)
      parse_fail(row, "empty class '" + ds.class_names[c] + "'");
  ds.validate();
  return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_dataset(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  const auto text = serialize_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        double fraction,
                                                        std::uint64_t seed) {
  ds.validate();
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::kInvalidArgument,
          "split fraction must be in (0, 1)");
  auto by_class = ds.indices_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c)
    require(by_class[c].size() >= 2, ErrorCode::kInvalidArgument,
            "class '" + ds.class_names[c] + "' needs at least 2 samples to split");

  Rng rng = make_rng(seed, 0x73706c74);
  std::vector<bool> in_train(ds.samples.size(), false);
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = idx.size();
    auto take = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    take = std::clamp<std::size_t>(take, 1, n - 1);
    for (std::size_t i = 0; i < take; ++i) in_train[idx[i]] = true;
  }
  auto train = empty_like(ds);
  auto test = empty_like(ds);
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    (in_train[i] ? train : test).samples.push_back(ds.samples[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace gwsdr
