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

#include "gwsdr/gwsdr.h"

#include <exception>
#include <new>
#include <string>

#include "gwsdr/acceptance.hpp"
#include "gwsdr/classifier.hpp"
#include "gwsdr/dataset.hpp"
#include "gwsdr/error.hpp"
#include "gwsdr/experiment.hpp"
#include "gwsdr/mode_matcher.hpp"

struct gwsdr_dataset {
  gwsdr::LabeledDataset data;
};

struct gwsdr_model {
  gwsdr::ClassifierModel model;
};

struct gwsdr_match_report {
  gwsdr::ModeMatchReport report;
};

namespace {

thread_local std::string last_error;

gwsdr_status to_status(gwsdr::ErrorCode code) {
  switch (code) {
    case gwsdr::ErrorCode::kInvalidArgument: return GWSDR_INVALID_ARGUMENT;
    case gwsdr::ErrorCode::kIo: return GWSDR_IO;
    case gwsdr::ErrorCode::kParse: return GWSDR_PARSE;
    case gwsdr::ErrorCode::kShapeMismatch: return GWSDR_SHAPE_MISMATCH;
    case gwsdr::ErrorCode::kBudgetExhausted: return GWSDR_BUDGET_EXHAUSTED;
    case gwsdr::ErrorCode::kDegenerateSpectrum: return GWSDR_DEGENERATE_SPECTRUM;
    case gwsdr::ErrorCode::kInternal: return GWSDR_INTERNAL;
  }
  return GWSDR_INTERNAL;
}

template <class F>
gwsdr_status guarded(F&& fn) {
  last_error.clear();
  try {
    return fn();
  } catch (const gwsdr::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return GWSDR_INTERNAL;
}

void need(const void* p, const char* what) {
  gwsdr::require(p != nullptr, gwsdr::ErrorCode::kInvalidArgument,
                 std::string(what) + " must not be NULL");
}

using Runner = gwsdr::RunSummary (*)(const gwsdr::ExperimentConfig&,
                                     const std::filesystem::path&);

gwsdr_status run_experiment(Runner run, const char* config_path, const char* out_dir,
                            size_t workers, gwsdr_line_callback on_warning, void* user) {
  return guarded([&] {
    need(config_path, "config_path");
    need(out_dir, "out_dir");
    auto cfg = gwsdr::load_experiment_config(config_path);
    if (workers > 0) cfg.workers = workers;
    const auto summary = run(cfg, out_dir);
    if (on_warning)
      for (const auto& w : summary.warnings) on_warning(w.c_str(), user);
    if (summary.truncated) {
      last_error = "source samples ran out; outputs are flagged as truncated";
      return GWSDR_BUDGET_EXHAUSTED;
    }
    return GWSDR_OK;
  });
}

}  // namespace

extern "C" {

const char* gwsdr_last_error(void) { return last_error.c_str(); }

const char* gwsdr_status_name(gwsdr_status status) {
  switch (status) {
    case GWSDR_OK: return "ok";
    case GWSDR_INVALID_ARGUMENT: return "invalid argument";
    case GWSDR_IO: return "io error";
    case GWSDR_PARSE: return "parse error";
    case GWSDR_SHAPE_MISMATCH: return "shape mismatch";
    case GWSDR_BUDGET_EXHAUSTED: return "budget exhausted";
    case GWSDR_DEGENERATE_SPECTRUM: return "degenerate spectrum";
    case GWSDR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void gwsdr_synthetic_spec_default(gwsdr_synthetic_spec* spec) {
  if (!spec) return;
  const gwsdr::SyntheticSpec d;
  spec->num_source_classes = d.num_source_classes;
  spec->num_target_classes = d.num_target_classes;
  spec->feature_dim = d.feature_dim;
  spec->signal_dim = d.signal_dim;
  spec->samples_per_source_class = d.samples_per_source_class;
  spec->samples_per_target_class = d.samples_per_target_class;
  spec->class_separation = d.class_separation;
  spec->target_perturbation = d.target_perturbation;
  spec->noise_scale = d.noise_scale;
  spec->shared_perturbation = d.shared_perturbation ? 1 : 0;
  spec->seed = d.seed;
}

gwsdr_status gwsdr_generate_synthetic(const gwsdr_synthetic_spec* spec, gwsdr_dataset** source,
                                      gwsdr_dataset** target, size_t* ground_truth) {
  return guarded([&] {
    need(spec, "spec");
    need(source, "source");
    need(target, "target");
    gwsdr::SyntheticSpec s;
    s.num_source_classes = spec->num_source_classes;
    s.num_target_classes = spec->num_target_classes;
    s.feature_dim = spec->feature_dim;
    s.signal_dim = spec->signal_dim;
    s.samples_per_source_class = spec->samples_per_source_class;
    s.samples_per_target_class = spec->samples_per_target_class;
    s.class_separation = spec->class_separation;
    s.target_perturbation = spec->target_perturbation;
    s.noise_scale = spec->noise_scale;
    s.shared_perturbation = spec->shared_perturbation != 0;
    s.seed = spec->seed;
    auto bench = gwsdr::generate_synthetic(s);
    auto* src = new gwsdr_dataset{std::move(bench.source)};
    auto* tgt = new (std::nothrow) gwsdr_dataset{std::move(bench.target)};
    if (!tgt) {
      delete src;
      throw std::bad_alloc();
    }
    if (ground_truth)
      for (size_t q = 0; q < bench.ground_truth_map.size(); ++q)
        ground_truth[q] = bench.ground_truth_map[q];
    *source = src;
    *target = tgt;
    return GWSDR_OK;
  });
}

gwsdr_status gwsdr_dataset_load(const char* path, gwsdr_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gwsdr_dataset{gwsdr::load_dataset(path)};
    return GWSDR_OK;
  });
}

gwsdr_status gwsdr_dataset_write(const gwsdr_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    gwsdr::write_dataset(ds->data, path);
    return GWSDR_OK;
  });
}

gwsdr_status gwsdr_dataset_split(const gwsdr_dataset* ds, double train_fraction, uint64_t seed,
                                 gwsdr_dataset** train, gwsdr_dataset** test) {
  return guarded([&] {
    need(ds, "dataset");
    need(train, "train");
    need(test, "test");
    auto [a, b] = gwsdr::split_dataset(ds->data, train_fraction, seed);
    auto* first = new gwsdr_dataset{std::move(a)};
    auto* second = new (std::nothrow) gwsdr_dataset{std::move(b)};
    if (!second) {
      delete first;
      throw std::bad_alloc();
    }
    *train = first;
    *test = second;
    return GWSDR_OK;
  });
}

size_t gwsdr_dataset_size(const gwsdr_dataset* ds) { return ds ? ds->data.samples.size() : 0; }

size_t gwsdr_dataset_num_classes(const gwsdr_dataset* ds) {
  return ds ? ds->data.class_names.size() : 0;
}

size_t gwsdr_dataset_feature_dim(const gwsdr_dataset* ds) { return ds ? ds->data.feature_dim : 0; }

const char* gwsdr_dataset_class_name(const gwsdr_dataset* ds, size_t index) {
  if (!ds || index >= ds->data.class_names.size()) return nullptr;
  return ds->data.class_names[index].c_str();
}

void gwsdr_dataset_free(gwsdr_dataset* ds) { delete ds; }

void gwsdr_train_config_default(gwsdr_train_config* cfg) {
  if (!cfg) return;
  const gwsdr::TrainConfig d;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->learning_rate = d.learning_rate;
  cfg->l2_weight = d.l2_weight;
  cfg->seed = d.seed;
}

gwsdr_status gwsdr_model_init(const size_t* layer_sizes, size_t count, uint64_t seed,
                              gwsdr_model** out) {
  return guarded([&] {
    need(layer_sizes, "layer_sizes");
    need(out, "out");
    std::vector<std::size_t> sizes(layer_sizes, layer_sizes + count);
    *out = new gwsdr_model{gwsdr::init_model(sizes, seed)};
    return GWSDR_OK;
  });
}

gwsdr_status gwsdr_model_train(const gwsdr_model* init, const gwsdr_dataset* data,
                               const gwsdr_train_config* cfg, gwsdr_model** out) {
  return guarded([&] {
    need(init, "init");
    need(data, "data");
    need(cfg, "cfg");
    need(out, "out");
    gwsdr::TrainConfig tc;
    tc.epochs = cfg->epochs;
    tc.batch_size = cfg->batch_size;
    tc.learning_rate = cfg->learning_rate;
    tc.l2_weight = cfg->l2_weight;
    tc.seed = cfg->seed;
    *out = new gwsdr_model{gwsdr::train(init->model, data->data, tc).model};
    return GWSDR_OK;
  });
}

gwsdr_status gwsdr_model_load(const char* path, gwsdr_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gwsdr_model{gwsdr::load_model(path)};
    return GWSDR_OK;
  });
}

gwsdr_status gwsdr_model_write(const gwsdr_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    gwsdr::write_model(model->model, path);
    return GWSDR_OK;
  });
}

gwsdr_status gwsdr_model_evaluate(const gwsdr_model* model, const gwsdr_dataset* data,
                                  double* accuracy) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(accuracy, "accuracy");
    *accuracy = gwsdr::evaluate(model->model, data->data).accuracy;
    return GWSDR_OK;
  });
}

size_t gwsdr_model_parameter_count(const gwsdr_model* model) {
  return model ? model->model.parameter_count() : 0;
}

void gwsdr_model_free(gwsdr_model* model) { delete model; }

gwsdr_status gwsdr_match(const gwsdr_model* model, const gwsdr_dataset* source,
                         const gwsdr_dataset* target, const char* method,
                         size_t samples_per_class, uint64_t seed, gwsdr_match_report** out) {
  return guarded([&] {
    need(model, "model");
    need(source, "source");
    need(method, "method");
    need(out, "out");
    gwsdr::MatchConfig mc;
    mc.method = gwsdr::parse_match_method(method);
    mc.samples_per_class = samples_per_class;
    mc.seed = seed;
    const auto classes = model->model.num_classes();
    auto report = gwsdr::match_modes(model->model, source->data, classes, mc);
    if (target) {
      gwsdr::require(target->data.class_names.size() == classes,
                     gwsdr::ErrorCode::kShapeMismatch,
                     "target dataset has " + std::to_string(target->data.class_names.size()) +
                         " classes but the model predicts " + std::to_string(classes));
      report.target_names = target->data.class_names;
    }
    *out = new gwsdr_match_report{std::move(report)};
    return GWSDR_OK;
  });
}

size_t gwsdr_match_report_size(const gwsdr_match_report* r) {
  return r ? r->report.matched.size() : 0;
}

const char* gwsdr_match_report_target_name(const gwsdr_match_report* r, size_t q) {
  if (!r || q >= r->report.target_names.size()) return nullptr;
  return r->report.target_names[q].c_str();
}

const char* gwsdr_match_report_source_name(const gwsdr_match_report* r, size_t q) {
  if (!r || q >= r->report.matched.size()) return nullptr;
  return r->report.source_names[r->report.matched[q]].c_str();
}

size_t gwsdr_match_report_source_index(const gwsdr_match_report* r, size_t q) {
  if (!r || q >= r->report.matched.size()) return static_cast<size_t>(-1);
  return r->report.matched[q];
}

size_t gwsdr_match_report_warning_count(const gwsdr_match_report* r) {
  return r ? r->report.warnings.size() : 0;
}

const char* gwsdr_match_report_warning(const gwsdr_match_report* r, size_t i) {
  if (!r || i >= r->report.warnings.size()) return nullptr;
  return r->report.warnings[i].c_str();
}

gwsdr_status gwsdr_match_report_write(const gwsdr_match_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    need(path, "path");
    gwsdr::write_report(r->report, path);
    return GWSDR_OK;
  });
}

void gwsdr_match_report_free(gwsdr_match_report* r) { delete r; }

gwsdr_status gwsdr_run_pipeline(const char* config_path, const char* out_dir, size_t workers,
                                gwsdr_line_callback on_warning, void* user) {
  return run_experiment(gwsdr::run_pipeline_experiment, config_path, out_dir, workers,
                        on_warning, user);
}

gwsdr_status gwsdr_run_sweep_augment(const char* config_path, const char* out_dir,
                                     size_t workers, gwsdr_line_callback on_warning,
                                     void* user) {
  return run_experiment(gwsdr::run_augment_experiment, config_path, out_dir, workers,
                        on_warning, user);
}

gwsdr_status gwsdr_run_sweep_iterate(const char* config_path, const char* out_dir,
                                     size_t workers, gwsdr_line_callback on_warning,
                                     void* user) {
  return run_experiment(gwsdr::run_iterate_experiment, config_path, out_dir, workers,
                        on_warning, user);
}

gwsdr_status gwsdr_check(const char* out_dir, gwsdr_line_callback on_line, void* user,
                         int* all_passed) {
  return guarded([&] {
    need(out_dir, "out_dir");
    bool ok = true;
    for (const auto& r : gwsdr::run_acceptance(out_dir)) {
      ok = ok && r.passed;
      if (on_line) on_line(gwsdr::format_result(r).c_str(), user);
    }
    if (all_passed) *all_passed = ok ? 1 : 0;
    return GWSDR_OK;
  });
}

}  // extern "C"
