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

#include "gwsdr/mode_matcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gwsdr/error.hpp"
#include "gwsdr/numeric_io.hpp"
#include "gwsdr/seeding.hpp"

namespace gwsdr {

std::string to_string(MatchMethod m) {
  return m == MatchMethod::kCount ? "count" : "likelihood";
}

MatchMethod parse_match_method(const std::string& s) {
  if (s == "count") return MatchMethod::kCount;
  if (s == "likelihood") return MatchMethod::kLikelihood;
  fail(ErrorCode::kInvalidArgument, "unknown match method '" + s + "' (count|likelihood)");
}

double class_log_likelihood(std::span<const double> target_probs) {
  require(!target_probs.empty(), ErrorCode::kInvalidArgument,
          "likelihood needs at least one sample");
  double sum = 0.0;
  for (double p : target_probs) sum += std::log(std::max(p, kMinProbability));
  return sum;
}

double class_log_likelihood(const ClassifierModel& model,
                            std::span<const std::vector<double>> source_features,
                            std::size_t target_class) {
  require(!source_features.empty(), ErrorCode::kInvalidArgument,
          "likelihood needs at least one sample");
  require(target_class < model.num_classes(), ErrorCode::kInvalidArgument,
          "target class " + std::to_string(target_class) + " out of range");
  std::vector<double> probs;
  probs.reserve(source_features.size());
  for (const auto& x : source_features)
    probs.push_back(forward(model, x).probs(static_cast<Eigen::Index>(target_class)));
  return class_log_likelihood(probs);
}

MatchScore score_pair(const std::vector<std::vector<double>>& probs, std::size_t target_class,
                      std::size_t source_class) {
  require(!probs.empty(), ErrorCode::kInvalidArgument, "no samples to score");
  MatchScore s;
  s.target_class = target_class;
  s.source_class = source_class;
  s.samples_used = probs.size();
  std::vector<double> pq;
  pq.reserve(probs.size());
  for (const auto& p : probs) {
    pq.push_back(p[target_class]);
    const auto top = static_cast<std::size_t>(
        std::distance(p.begin(), std::max_element(p.begin(), p.end())));
    if (top == target_class) ++s.argmax_count;
  }
  s.log_likelihood = class_log_likelihood(pq);
  s.mean_target_prob = std::accumulate(pq.begin(), pq.end(), 0.0) / static_cast<double>(pq.size());
  return s;
}

bool ranks_before(const MatchScore& a, const MatchScore& b, MatchMethod method) {
  if (method == MatchMethod::kCount) {
    if (a.argmax_count != b.argmax_count) return a.argmax_count > b.argmax_count;
    if (a.mean_target_prob != b.mean_target_prob) return a.mean_target_prob > b.mean_target_prob;
  } else if (a.log_likelihood != b.log_likelihood) {
    return a.log_likelihood > b.log_likelihood;
  }
  return a.source_class < b.source_class;
}

ModeMatchReport match_modes(const ClassifierModel& model, const LabeledDataset& source,
                            std::size_t target_class_count, const MatchConfig& cfg) {
  model.validate();
  source.validate();
  require(model.num_classes() == target_class_count, ErrorCode::kShapeMismatch,
          "model outputs " + std::to_string(model.num_classes()) + " classes but M=" +
              std::to_string(target_class_count));
  require(model.input_dim() == source.feature_dim, ErrorCode::kShapeMismatch,
          "source feature_dim " + std::to_string(source.feature_dim) +
              " does not match model input " + std::to_string(model.input_dim()));

  auto by_class = source.indices_by_class();
  std::size_t smallest = by_class.front().size();
  for (const auto& c : by_class) smallest = std::min(smallest, c.size());
  const std::size_t l =
      cfg.samples_per_class ? cfg.samples_per_class : std::min(smallest, kMaxAutoMatchSamples);
  require(l <= smallest, ErrorCode::kInvalidArgument,
          "samples_per_class l=" + std::to_string(l) + " exceeds the smallest source class (" +
              std::to_string(smallest) + ")");

  ModeMatchReport report;
  report.method = cfg.method;
  report.source_names = source.class_names;
  for (std::size_t q = 0; q < target_class_count; ++q)
    report.target_names.push_back("target" + std::to_string(q));

  // probs[p][j] = P(y | x_j) for the l sampled members of source class p.
  std::vector<std::vector<std::vector<double>>> probs(by_class.size());
  for (std::size_t p = 0; p < by_class.size(); ++p) {
    auto idx = by_class[p];
    Rng rng = make_rng(cfg.seed, p);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < l; ++j)
      probs[p].push_back(predict_probs(model, pooled_features(source, source.samples[idx[j]])));
  }

  report.ranked.resize(target_class_count);
  for (std::size_t q = 0; q < target_class_count; ++q) {
    auto& row = report.ranked[q];
    for (std::size_t p = 0; p < by_class.size(); ++p) row.push_back(score_pair(probs[p], q, p));
    MatchMethod method = cfg.method;
    if (method == MatchMethod::kCount &&
        std::all_of(row.begin(), row.end(), [](const auto& s) { return s.argmax_count == 0; })) {
      method = MatchMethod::kLikelihood;
      report.warnings.push_back("target class " + std::to_string(q) +
                                ": no source sample is labeled as it; ranked by likelihood");
    }
    std::sort(row.begin(), row.end(),
              [method](const auto& a, const auto& b) { return ranks_before(a, b, method); });
    report.matched.push_back(row.front().source_class);
  }

  std::map<std::size_t, std::vector<std::size_t>> claimed;
  for (std::size_t q = 0; q < report.matched.size(); ++q) claimed[report.matched[q]].push_back(q);
  for (const auto& [p, qs] : claimed) {
    if (qs.size() < 2) continue;
    std::string msg = "source class " + source.class_names[p] + " matched by target classes";
    for (auto q : qs) msg += " " + std::to_string(q);
    report.warnings.push_back(msg);
  }
  return report;
}

std::size_t second_best(const ModeMatchReport& report, std::size_t target_class) {
  require(target_class < report.ranked.size(), ErrorCode::kInvalidArgument,
          "target class out of range");
  require(report.ranked[target_class].size() >= 2, ErrorCode::kInvalidArgument,
          "second best needs at least 2 source classes");
  return report.ranked[target_class][1].source_class;
}

std::vector<std::size_t> second_best_map(const ModeMatchReport& report) {
  std::vector<std::size_t> out;
  for (std::size_t q = 0; q < report.ranked.size(); ++q) out.push_back(second_best(report, q));
  return out;
}

std::string format_report(const ModeMatchReport& report) {
  std::ostringstream os;
  os << "target_class,rank,source_class,log_likelihood,argmax_count,mean_prob\n";
  for (std::size_t q = 0; q < report.ranked.size(); ++q)
    for (std::size_t r = 0; r < report.ranked[q].size(); ++r) {
      const auto& s = report.ranked[q][r];
      os << q << ',' << r + 1 << ',' << s.source_class << ',' << format_real(s.log_likelihood)
         << ',' << s.argmax_count << ',' << format_real(s.mean_target_prob) << '\n';
    }
  return os.str();
}

void write_report(const ModeMatchReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << format_report(report);
}

std::vector<std::size_t> candidate_offsets(std::size_t length, std::size_t window,
                                           std::size_t stride) {
  require(stride >= 1, ErrorCode::kInvalidArgument, "stride must be positive");
  require(window >= 1 && window <= length, ErrorCode::kInvalidArgument,
          "window length " + std::to_string(window) + " must be in [1, " +
              std::to_string(length) + "]");
  std::vector<std::size_t> out;
  for (std::size_t o = 0; o + window <= length; o += stride) out.push_back(o);
  if (out.back() != length - window) out.push_back(length - window);
  return out;
}

TrimResult trim_sequence(const ClassifierModel& model, std::span<const double> sequence,
                         std::size_t dim, std::size_t target_class, std::size_t window,
                         std::size_t stride) {
  require(dim == model.input_dim(), ErrorCode::kShapeMismatch,
          "frame dimension does not match model input");
  require(dim > 0 && sequence.size() % dim == 0, ErrorCode::kShapeMismatch,
          "sequence length is not a whole number of frames");
  require(target_class < model.num_classes(), ErrorCode::kInvalidArgument,
          "target class out of range");
  const std::size_t length = sequence.size() / dim;
  require(length >= window, ErrorCode::kInvalidArgument,
          "sequence of " + std::to_string(length) + " frames is shorter than window " +
              std::to_string(window));
  TrimResult best;
  bool have = false;
  for (auto o : candidate_offsets(length, window, stride)) {
    const auto frames = sequence.subspan(o * dim, window * dim);
    const auto pooled = mean_pool(frames, dim);
    const double score = forward(model, pooled).probs(static_cast<Eigen::Index>(target_class));
    if (!have || score > best.score) {
      best.offset = o;
      best.score = score;
      have = true;
    }
  }
  const auto frames = sequence.subspan(best.offset * dim, window * dim);
  best.frames.assign(frames.begin(), frames.end());
  return best;
}

RelabeledSet relabel_matched(const LabeledDataset& source,
                             std::span<const std::size_t> class_map,
                             const std::vector<std::string>& target_names,
                             std::size_t per_class_budget,
                             const std::set<std::size_t>& exclude, std::uint64_t seed) {
  source.validate();
  require(class_map.size() == target_names.size(), ErrorCode::kInvalidArgument,
          "one source class per target class required");
  require(per_class_budget >= 1, ErrorCode::kInvalidArgument, "budget must be positive");
  auto by_class = source.indices_by_class();
  RelabeledSet out;
  out.data.class_names = target_names;
  out.data.feature_dim = source.feature_dim;
  out.data.sequence_length = source.sequence_length;
  std::set<std::size_t> used = exclude;
  for (std::size_t q = 0; q < class_map.size(); ++q) {
    const auto p = class_map[q];
    require(p < by_class.size(), ErrorCode::kInvalidArgument,
            "mapped source class " + std::to_string(p) + " out of range");
    std::vector<std::size_t> pool;
    for (auto i : by_class[p])
      if (!used.contains(i)) pool.push_back(i);
    if (pool.size() < per_class_budget)
      fail(ErrorCode::kBudgetExhausted,
           "source class " + source.class_names[p] + " has " + std::to_string(pool.size()) +
               " unused samples, target class " + std::to_string(q) + " needs " +
               std::to_string(per_class_budget));
    Rng rng = make_rng(seed, q);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(per_class_budget);
    std::sort(pool.begin(), pool.end());
    for (auto i : pool) {
      out.data.samples.push_back({source.samples[i].values, q});
      out.source_ids.push_back(i);
      used.insert(i);
    }
  }
  return out;
}

RelabeledSet relabel_matched(const LabeledDataset& source, const ModeMatchReport& report,
                             std::size_t per_class_budget,
                             const std::set<std::size_t>& exclude, std::uint64_t seed) {
  return relabel_matched(source, report.matched, report.target_names, per_class_budget,
                         exclude, seed);
}

}  // namespace gwsdr
