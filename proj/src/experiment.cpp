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

#include "gwsdr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gwsdr/error.hpp"
#include "gwsdr/numeric_io.hpp"
#include "gwsdr/seeding.hpp"

namespace gwsdr {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

bool parse_bool(std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::kParse, "not a boolean: '" + std::string(v) + "'");
}

std::size_t parse_count(std::string_view v) {
  const auto n = parse_int(v);
  require(n >= 0, ErrorCode::kParse, "expected a non-negative integer, got " + std::to_string(n));
  return static_cast<std::size_t>(n);
}

template <class T, class F>
std::vector<T> parse_list(std::string_view v, F item) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  for (auto part : split(v, ',')) out.push_back(item(part));
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }
std::string fmt_size(std::size_t n) { return std::to_string(n); }

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, std::string_view, const fs::path&)> set;
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;  // nullopt = omit
};

void add_train_keys(std::vector<Key>& keys, const std::string& prefix,
                    TrainConfig PipelineConfig::*member, bool with_dr) {
  auto tc = [member](ExperimentConfig& c) -> TrainConfig& { return c.pipeline.*member; };
  auto ctc = [member](const ExperimentConfig& c) -> const TrainConfig& {
    return c.pipeline.*member;
  };
  keys.push_back({prefix + ".epochs",
                  [tc](auto& c, auto v, auto&) { tc(c).epochs = parse_count(v); },
                  [ctc](auto& c) { return fmt_size(ctc(c).epochs); }});
  keys.push_back({prefix + ".batch_size",
                  [tc](auto& c, auto v, auto&) { tc(c).batch_size = parse_count(v); },
                  [ctc](auto& c) { return fmt_size(ctc(c).batch_size); }});
  keys.push_back({prefix + ".learning_rate",
                  [tc](auto& c, auto v, auto&) { tc(c).learning_rate = parse_real(v); },
                  [ctc](auto& c) { return format_exact(ctc(c).learning_rate); }});
  keys.push_back({prefix + ".l2_weight",
                  [tc](auto& c, auto v, auto&) { tc(c).l2_weight = parse_real(v); },
                  [ctc](auto& c) { return format_exact(ctc(c).l2_weight); }});
  if (!with_dr) return;
  keys.push_back({prefix + ".dr_weight",
                  [tc](auto& c, auto v, auto&) { tc(c).dr_weight = parse_real(v); },
                  [ctc](auto& c) { return format_exact(ctc(c).dr_weight); }});
  keys.push_back({prefix + ".dr_rank",
                  [tc](auto& c, auto v, auto&) { tc(c).dr_rank = parse_count(v); },
                  [ctc](auto& c) -> std::optional<std::string> {
                    if (!ctc(c).dr_rank) return std::nullopt;
                    return fmt_size(*ctc(c).dr_rank);
                  }});
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    auto path_key = [&k](const std::string& name, std::optional<fs::path> DataConfig::*m) {
      k.push_back({name,
                   [m](auto& c, auto v, const fs::path& base) {
                     fs::path p{std::string(trim(v))};
                     if (p.is_relative() && !base.empty()) p = base / p;
                     c.data.*m = p.lexically_normal();
                   },
                   [m](auto& c) -> std::optional<std::string> {
                     if (!(c.data.*m)) return std::nullopt;
                     return (c.data.*m)->string();
                   }});
    };
    path_key("data.source", &DataConfig::source);
    path_key("data.target_train", &DataConfig::target_train);
    path_key("data.target_test", &DataConfig::target_test);

    auto gen_size = [&k](const std::string& name, std::size_t SyntheticSpec::*m) {
      k.push_back({"generate." + name,
                   [m](auto& c, auto v, auto&) { c.data.generate.*m = parse_count(v); },
                   [m](auto& c) -> std::optional<std::string> {
                     if (c.data.from_files()) return std::nullopt;
                     return fmt_size(c.data.generate.*m);
                   }});
    };
    auto gen_real = [&k](const std::string& name, double SyntheticSpec::*m) {
      k.push_back({"generate." + name,
                   [m](auto& c, auto v, auto&) { c.data.generate.*m = parse_real(v); },
                   [m](auto& c) -> std::optional<std::string> {
                     if (c.data.from_files()) return std::nullopt;
                     return format_exact(c.data.generate.*m);
                   }});
    };
    gen_size("num_source_classes", &SyntheticSpec::num_source_classes);
    gen_size("num_target_classes", &SyntheticSpec::num_target_classes);
    gen_size("feature_dim", &SyntheticSpec::feature_dim);
    gen_size("signal_dim", &SyntheticSpec::signal_dim);
    gen_size("samples_per_source_class", &SyntheticSpec::samples_per_source_class);
    gen_real("class_separation", &SyntheticSpec::class_separation);
    gen_real("target_perturbation", &SyntheticSpec::target_perturbation);
    gen_real("noise_scale", &SyntheticSpec::noise_scale);
    k.push_back({"generate.shared_perturbation",
                 [](auto& c, auto v, auto&) { c.data.generate.shared_perturbation = parse_bool(v); },
                 [](auto& c) -> std::optional<std::string> {
                   if (c.data.from_files()) return std::nullopt;
                   return fmt_bool(c.data.generate.shared_perturbation);
                 }});
    k.push_back({"generate.ground_truth_map",
                 [](auto& c, auto v, auto&) {
                   c.data.generate.ground_truth_map = parse_list<std::size_t>(v, parse_count);
                 },
                 [](auto& c) -> std::optional<std::string> {
                   if (c.data.from_files() || c.data.generate.ground_truth_map.empty())
                     return std::nullopt;
                   return join(c.data.generate.ground_truth_map, fmt_size);
                 }});
    k.push_back({"generate.target_train_per_class",
                 [](auto& c, auto v, auto&) { c.data.target_train_per_class = parse_count(v); },
                 [](auto& c) -> std::optional<std::string> {
                   if (c.data.from_files()) return std::nullopt;
                   return fmt_size(c.data.target_train_per_class);
                 }});
    k.push_back({"generate.target_test_per_class",
                 [](auto& c, auto v, auto&) { c.data.target_test_per_class = parse_count(v); },
                 [](auto& c) -> std::optional<std::string> {
                   if (c.data.from_files()) return std::nullopt;
                   return fmt_size(c.data.target_test_per_class);
                 }});

    auto seq = [](ExperimentConfig& c) -> SequenceSpec& {
      if (!c.data.source_sequences) c.data.source_sequences.emplace();
      return *c.data.source_sequences;
    };
    auto seq_size = [&k, seq](const std::string& name, std::size_t SequenceSpec::*m) {
      k.push_back({"sequence." + name,
                   [m, seq](auto& c, auto v, auto&) { seq(c).*m = parse_count(v); },
                   [m](auto& c) -> std::optional<std::string> {
                     if (c.data.from_files() || !c.data.source_sequences) return std::nullopt;
                     return fmt_size(*c.data.source_sequences.*m);
                   }});
    };
    seq_size("length", &SequenceSpec::sequence_length);
    seq_size("span_length", &SequenceSpec::span_length);
    seq_size("span_alignment", &SequenceSpec::span_alignment);
    k.push_back({"sequence.noise_scale",
                 [seq](auto& c, auto v, auto&) { seq(c).noise_scale = parse_real(v); },
                 [](auto& c) -> std::optional<std::string> {
                   if (c.data.from_files() || !c.data.source_sequences) return std::nullopt;
                   return format_exact(c.data.source_sequences->noise_scale);
                 }});

    k.push_back({"seeds",
                 [](auto& c, auto v, auto&) {
                   c.seeds = parse_list<std::uint64_t>(
                       v, [](auto s) { return static_cast<std::uint64_t>(parse_count(s)); });
                 },
                 [](auto& c) {
                   return join(c.seeds, [](auto s) { return std::to_string(s); });
                 }});
    k.push_back({"hidden",
                 [](auto& c, auto v, auto&) { c.pipeline.hidden = parse_count(v); },
                 [](auto& c) { return fmt_size(c.pipeline.hidden); }});
    add_train_keys(k, "baseline", &PipelineConfig::baseline_cfg, false);
    add_train_keys(k, "source", &PipelineConfig::source_cfg, false);
    add_train_keys(k, "retrain", &PipelineConfig::retrain_cfg, true);

    k.push_back({"match.method",
                 [](auto& c, auto v, auto&) {
                   c.pipeline.match_cfg.method = parse_match_method(std::string(trim(v)));
                 },
                 [](auto& c) { return to_string(c.pipeline.match_cfg.method); }});
    k.push_back({"match.samples_per_class",
                 [](auto& c, auto v, auto&) {
                   c.pipeline.match_cfg.samples_per_class = parse_count(v);
                 },
                 [](auto& c) { return fmt_size(c.pipeline.match_cfg.samples_per_class); }});

    auto pipe_size = [&k](const std::string& name, std::size_t PipelineConfig::*m) {
      k.push_back({name, [m](auto& c, auto v, auto&) { c.pipeline.*m = parse_count(v); },
                   [m](auto& c) { return fmt_size(c.pipeline.*m); }});
    };
    auto pipe_bool = [&k](const std::string& name, bool PipelineConfig::*m) {
      k.push_back({name, [m](auto& c, auto v, auto&) { c.pipeline.*m = parse_bool(v); },
                   [m](auto& c) { return fmt_bool(c.pipeline.*m); }});
    };
    pipe_size("augment_budget", &PipelineConfig::augment_budget);
    pipe_size("iterations", &PipelineConfig::iterations);
    pipe_bool("use_dr", &PipelineConfig::use_dr);
    pipe_bool("use_second_best", &PipelineConfig::use_second_best);
    pipe_bool("random_control", &PipelineConfig::random_control);
    pipe_bool("source_warm_start", &PipelineConfig::source_warm_start);
    k.push_back({"source_holdout",
                 [](auto& c, auto v, auto&) { c.pipeline.source_holdout = parse_real(v); },
                 [](auto& c) { return format_exact(c.pipeline.source_holdout); }});
    auto trim_key = [&k](const std::string& name, std::size_t TrimConfig::*m) {
      k.push_back({"trim." + name,
                   [m](auto& c, auto v, auto&) {
                     if (!c.pipeline.trim) c.pipeline.trim.emplace();
                     (*c.pipeline.trim).*m = parse_count(v);
                   },
                   [m](auto& c) -> std::optional<std::string> {
                     if (!c.pipeline.trim) return std::nullopt;
                     return fmt_size((*c.pipeline.trim).*m);
                   }});
    };
    trim_key("window", &TrimConfig::window);
    trim_key("stride", &TrimConfig::stride);

    k.push_back({"sweep.fractions",
                 [](auto& c, auto v, auto&) { c.fractions = parse_list<double>(v, parse_real); },
                 [](auto& c) { return join(c.fractions, format_exact); }});
    k.push_back({"sweep.max_iterations",
                 [](auto& c, auto v, auto&) { c.max_iterations = parse_count(v); },
                 [](auto& c) { return fmt_size(c.max_iterations); }});
    k.push_back({"sweep.include_random",
                 [](auto& c, auto v, auto&) { c.include_random = parse_bool(v); },
                 [](auto& c) { return fmt_bool(c.include_random); }});
    // Worker count never changes results, so it is left out of the echo.
    k.push_back({"workers", [](auto& c, auto v, auto&) { c.workers = parse_count(v); },
                 [](auto&) -> std::optional<std::string> { return std::nullopt; }});
    return k;
  }();
  return keys;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path.string());
}

Json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json config_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  for (const auto& k : registry())
    if (auto v = k.get(cfg)) j[k.name] = *v;
  return j;
}

Json names_json(std::span<const std::size_t> ids, const std::vector<std::string>& names) {
  Json j = Json::array();
  for (auto i : ids) j.push_back(names.at(i));
  return j;
}

Json trace_json(const std::vector<EpochStats>& trace) {
  Json j = Json::array();
  for (std::size_t e = 0; e < trace.size(); ++e) {
    const auto& s = trace[e];
    j.push_back({{"epoch", e + 1},
                 {"total_loss", num(s.total_loss)},
                 {"cross_entropy", num(s.cross_entropy)},
                 {"dr_loss", num(s.dr_loss)},
                 {"dr_skipped", s.dr_skipped},
                 {"min_eigengap", num(s.min_eigengap)},
                 {"spectrum", s.spectrum}});
  }
  return j;
}

Json matching_json(const ModeMatchReport& r) {
  Json rows = Json::array();
  for (std::size_t q = 0; q < r.ranked.size(); ++q) {
    const auto& best = r.ranked[q].front();
    rows.push_back({{"target_class", r.target_names[q]},
                    {"source_class", r.source_names[r.matched[q]]},
                    {"log_likelihood", num(best.log_likelihood)},
                    {"argmax_count", best.argmax_count},
                    {"mean_prob", num(best.mean_target_prob)},
                    {"samples_used", best.samples_used}});
  }
  return {{"method", to_string(r.method)}, {"table", rows}};
}

std::size_t count_agreement(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) n += a[i] == b[i];
  return n;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results land by
// index, so the merge order never depends on scheduling. The first failing
// index (lowest) is rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, std::size_t workers, F fn) {
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, n));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::string csv_row(const std::string& variant, double x, std::uint64_t seed, double acc,
                    double sep) {
  return variant + ',' + format_real(x) + ',' + std::to_string(seed) + ',' + format_real(acc) +
         ',' + format_real(sep) + '\n';
}

std::string pipeline_variant(const PipelineConfig& c) {
  if (c.random_control) return "random";
  if (c.use_second_best) return c.use_dr ? "second_best_dr" : "second_best";
  return c.use_dr ? "gws_dr" : "gws";
}

// Mean accuracy/separability per (variant, x), in first-appearance order.
Json summarize(const std::vector<std::vector<SweepPoint>>& per_seed) {
  struct Acc {
    std::string variant;
    double x;
    double acc = 0, sep = 0;
    std::size_t n = 0;
  };
  std::vector<Acc> cells;
  for (const auto& pts : per_seed)
    for (const auto& p : pts) {
      auto it = std::find_if(cells.begin(), cells.end(),
                             [&](const Acc& a) { return a.variant == p.variant && a.x == p.x; });
      if (it == cells.end()) {
        cells.push_back({p.variant, p.x});
        it = std::prev(cells.end());
      }
      it->acc += p.accuracy;
      it->sep += p.separability;
      ++it->n;
    }
  Json j = Json::array();
  for (const auto& c : cells)
    j.push_back({{"variant", c.variant},
                 {"x", num(c.x)},
                 {"mean_accuracy", num(c.acc / static_cast<double>(c.n))},
                 {"mean_separability", num(c.sep / static_cast<double>(c.n))},
                 {"seeds", c.n}});
  return j;
}

struct SweepRun {
  std::uint64_t seed;
  SweepResult result;
  std::vector<std::size_t> ground_truth;
  std::vector<std::string> source_names;
};

RunSummary write_sweep(const ExperimentConfig& cfg, const fs::path& out_dir,
                       const std::string& verb, const std::vector<SweepRun>& runs) {
  fs::create_directories(out_dir);
  RunSummary summary;
  std::string csv = std::string(kSweepCsvHeader) + '\n';
  Json jruns = Json::array();
  std::vector<std::vector<SweepPoint>> per_seed;
  double base = 0, src = 0;
  for (const auto& r : runs) {
    for (const auto& p : r.result.points)
      csv += csv_row(p.variant, p.x, r.seed, p.accuracy, p.separability);
    per_seed.push_back(r.result.points);
    base += r.result.baseline_accuracy;
    src += r.result.source_heldout_accuracy;
    Json jr = {{"seed", r.seed},
               {"baseline_accuracy", num(r.result.baseline_accuracy)},
               {"source_heldout_accuracy", num(r.result.source_heldout_accuracy)},
               {"matched", names_json(r.result.matched, r.source_names)}};
    if (!r.ground_truth.empty()) {
      jr["ground_truth"] = names_json(r.ground_truth, r.source_names);
      jr["matches_correct"] = count_agreement(r.result.matched, r.ground_truth);
    }
    jr["truncated"] = r.result.truncated;
    jr["warnings"] = r.result.warnings;
    jruns.push_back(std::move(jr));
    summary.truncated = summary.truncated || r.result.truncated;
    for (const auto& w : r.result.warnings)
      summary.warnings.push_back("seed " + std::to_string(r.seed) + ": " + w);
  }
  const double n = static_cast<double>(runs.size());
  Json doc = {{"command", verb},
              {"config", config_json(cfg)},
              {"truncated", summary.truncated},
              {"mean_baseline_accuracy", num(base / n)},
              {"mean_source_heldout_accuracy", num(src / n)},
              {"summary", summarize(per_seed)},
              {"runs", jruns}};
  const auto csv_path = out_dir / (verb + ".csv");
  const auto json_path = out_dir / (verb + ".json");
  const auto cfg_path = out_dir / (verb + ".config");
  write_text(csv_path, csv);
  write_text(json_path, doc.dump(2) + '\n');
  write_text(cfg_path, serialize_experiment_config(cfg));
  summary.written = {csv_path, json_path, cfg_path};
  return summary;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!seeds.empty(), ErrorCode::kInvalidArgument, "seeds must not be empty");
  require(workers >= 1, ErrorCode::kInvalidArgument, "workers must be >= 1");
  require(max_iterations >= 1, ErrorCode::kInvalidArgument, "sweep.max_iterations must be >= 1");
  require(!fractions.empty() && std::is_sorted(fractions.begin(), fractions.end()),
          ErrorCode::kInvalidArgument, "sweep.fractions must be non-empty and ascending");
  for (double f : fractions)
    require(f > 0.0, ErrorCode::kInvalidArgument, "sweep.fractions must be positive");
  const int paths = data.source.has_value() + data.target_train.has_value() +
                    data.target_test.has_value();
  require(paths == 0 || paths == 3, ErrorCode::kInvalidArgument,
          "data.source, data.target_train and data.target_test go together");
  if (!data.from_files()) {
    require(data.target_train_per_class >= 1 && data.target_test_per_class >= 1,
            ErrorCode::kInvalidArgument, "target train/test sizes per class must be >= 1");
    SyntheticSpec s = data.generate;
    s.samples_per_target_class = data.target_train_per_class + data.target_test_per_class;
    s.validate();
  }
  pipeline.validate();
}

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = std::string_view(line);
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "config line " + std::to_string(lineno);
    require(eq != std::string_view::npos, ErrorCode::kParse, where + ": expected key = value");
    const std::string key(trim(body.substr(0, eq)));
    const auto value = trim(body.substr(eq + 1));
    const auto& keys = registry();
    auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
    require(it != keys.end(), ErrorCode::kParse, where + ": unknown key '" + key + "'");
    require(seen.emplace(key, lineno).second, ErrorCode::kParse,
            where + ": duplicate key '" + key + "'");
    try {
      it->set(cfg, value, base_dir);
    } catch (const Error& e) {
      fail(e.code(), where + " (" + key + "): " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_experiment_config(ss.str(), path.parent_path());
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : registry())
    if (auto v = k.get(cfg)) out += k.name + " = " + *v + '\n';
  return out;
}

ReplicateData replicate_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  ReplicateData out;
  const auto& d = cfg.data;
  if (d.from_files()) {
    out.source = load_dataset(*d.source);
    out.target_train = load_dataset(*d.target_train);
    out.target_test = load_dataset(*d.target_test);
    return out;
  }
  SyntheticSpec spec = d.generate;
  spec.samples_per_target_class = d.target_train_per_class + d.target_test_per_class;
  spec.seed = seed;
  auto bench = generate_synthetic(spec);
  const double f = static_cast<double>(d.target_train_per_class) /
                   static_cast<double>(spec.samples_per_target_class);
  std::tie(out.target_train, out.target_test) = split_dataset(bench.target, f, seed);
  out.ground_truth_map = bench.ground_truth_map;
  if (d.source_sequences) {
    SequenceSpec s = *d.source_sequences;
    s.samples_per_class = spec.samples_per_source_class;
    s.seed = mix_seed(seed, 0x736571);
    out.source = generate_sequences(bench.source_means, bench.source.class_names, s).data;
  } else {
    out.source = std::move(bench.source);
  }
  return out;
}

PipelineConfig replicate_pipeline_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  PipelineConfig p = cfg.pipeline;
  p.init_seed = seed;
  p.seed = seed;
  p.baseline_cfg.seed = mix_seed(seed, 1);
  p.source_cfg.seed = mix_seed(seed, 2);
  p.retrain_cfg.seed = mix_seed(seed, 3);
  p.match_cfg.seed = seed;
  return p;
}

RunSummary run_pipeline_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  struct Run {
    std::uint64_t seed;
    PipelineResult result;
    ReplicateData data;
  };
  auto runs = parallel_map<Run>(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
    const auto seed = cfg.seeds[i];
    auto data = replicate_data(cfg, seed);
    auto res = run_pipeline_partial(data.source, data.target_train, data.target_test,
                                    replicate_pipeline_config(cfg, seed));
    return Run{seed, std::move(res), std::move(data)};
  });

  fs::create_directories(out_dir / "models");
  RunSummary summary;
  const std::string variant = pipeline_variant(cfg.pipeline);
  std::string csv = std::string(kSweepCsvHeader) + '\n';
  Json jruns = Json::array();
  double base = 0, fin = 0, src = 0;
  for (const auto& run : runs) {
    const auto& r = run.result;
    const auto& names = run.data.source.class_names;
    const std::string stem = "seed" + std::to_string(run.seed);
    const auto models = out_dir / "models";
    write_model(r.prep.baseline_model, models / (stem + "_baseline.model"));
    write_model(r.prep.source.model, models / (stem + "_source.model"));
    write_model(r.final_model, models / (stem + "_final.model"));
    write_report(r.prep.report, models / (stem + "_match.csv"));

    csv += csv_row("baseline", 0, run.seed, r.prep.baseline_accuracy, r.prep.baseline_separability);
    Json rounds = Json::array();
    for (const auto& rec : r.rounds) {
      csv += csv_row(variant, static_cast<double>(rec.round), run.seed, rec.test_accuracy,
                     rec.separability);
      rounds.push_back({{"round", rec.round},
                        {"test_accuracy", num(rec.test_accuracy)},
                        {"separability", num(rec.separability)},
                        {"confusion", rec.confusion},
                        {"used_source_ids", rec.used_source_ids},
                        {"trace", trace_json(rec.trace)}});
    }
    const double final_acc = r.rounds.empty() ? r.prep.baseline_accuracy
                                              : r.rounds.back().test_accuracy;
    base += r.prep.baseline_accuracy;
    fin += final_acc;
    src += r.prep.source.heldout_accuracy;

    Json jr = {{"seed", run.seed},
               {"baseline_accuracy", num(r.prep.baseline_accuracy)},
               {"baseline_separability", num(r.prep.baseline_separability)},
               {"baseline_confusion", r.prep.baseline_confusion},
               {"source_heldout_accuracy", num(r.prep.source.heldout_accuracy)},
               {"final_accuracy", num(final_acc)},
               {"matching", matching_json(r.prep.report)},
               {"augment_map", names_json(r.augment_map, names)}};
    if (!run.data.ground_truth_map.empty()) {
      jr["ground_truth"] = names_json(run.data.ground_truth_map, names);
      jr["matches_correct"] = count_agreement(r.prep.report.matched, run.data.ground_truth_map);
    }
    jr["baseline_trace"] = trace_json(r.prep.baseline_trace);
    jr["source_trace"] = trace_json(r.prep.source.trace);
    jr["rounds"] = rounds;
    jr["truncated"] = r.truncated ? Json(*r.truncated) : Json(nullptr);
    jr["warnings"] = r.warnings;
    jruns.push_back(std::move(jr));

    summary.truncated = summary.truncated || r.truncated.has_value();
    for (const auto& w : r.warnings)
      summary.warnings.push_back("seed " + std::to_string(run.seed) + ": " + w);
  }
  const double n = static_cast<double>(runs.size());
  Json doc = {{"command", "pipeline"},
              {"variant", variant},
              {"config", config_json(cfg)},
              {"truncated", summary.truncated},
              {"mean_baseline_accuracy", num(base / n)},
              {"mean_final_accuracy", num(fin / n)},
              {"mean_source_heldout_accuracy", num(src / n)},
              {"runs", jruns}};
  const auto csv_path = out_dir / "pipeline.csv";
  const auto json_path = out_dir / "pipeline.json";
  const auto cfg_path = out_dir / "pipeline.config";
  write_text(csv_path, csv);
  write_text(json_path, doc.dump(2) + '\n');
  write_text(cfg_path, serialize_experiment_config(cfg));
  summary.written = {csv_path, json_path, cfg_path, out_dir / "models"};
  return summary;
}

RunSummary run_augment_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  auto runs = parallel_map<SweepRun>(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
    const auto seed = cfg.seeds[i];
    auto data = replicate_data(cfg, seed);
    auto res = augmentation_sweep(data.source, data.target_train, data.target_test,
                                  replicate_pipeline_config(cfg, seed), cfg.fractions,
                                  cfg.include_random);
    return SweepRun{seed, std::move(res), data.ground_truth_map, data.source.class_names};
  });
  return write_sweep(cfg, out_dir, "augment", runs);
}

RunSummary run_iterate_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  auto runs = parallel_map<SweepRun>(cfg.seeds.size(), cfg.workers, [&](std::size_t i) {
    const auto seed = cfg.seeds[i];
    auto data = replicate_data(cfg, seed);
    auto res = iteration_sweep(data.source, data.target_train, data.target_test,
                               replicate_pipeline_config(cfg, seed), cfg.max_iterations);
    return SweepRun{seed, std::move(res), data.ground_truth_map, data.source.class_names};
  });
  return write_sweep(cfg, out_dir, "iterate", runs);
}

}  // namespace gwsdr
