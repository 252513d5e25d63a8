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

#ifndef GWSDR_GWSDR_H_
#define GWSDR_GWSDR_H_

/* C interface to the gwsdr library. Objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every fallible call
 * returns a gwsdr_status; on failure gwsdr_last_error() describes it (per
 * thread, valid until the next call on that thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(GWSDR_BUILDING_LIBRARY)
#define GWSDR_API __attribute__((visibility("default")))
#else
#define GWSDR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gwsdr_status {
  GWSDR_OK = 0,
  GWSDR_INVALID_ARGUMENT = 1,
  GWSDR_IO = 2,
  GWSDR_PARSE = 3,
  GWSDR_SHAPE_MISMATCH = 4,
  GWSDR_BUDGET_EXHAUSTED = 5,
  GWSDR_DEGENERATE_SPECTRUM = 6,
  GWSDR_INTERNAL = 7
} gwsdr_status;

typedef struct gwsdr_dataset gwsdr_dataset;
typedef struct gwsdr_model gwsdr_model;
typedef struct gwsdr_match_report gwsdr_match_report;

GWSDR_API const char* gwsdr_last_error(void);
GWSDR_API const char* gwsdr_status_name(gwsdr_status status);

/* --- datasets ----------------------------------------------------------- */

typedef struct gwsdr_synthetic_spec {
  size_t num_source_classes;
  size_t num_target_classes;
  size_t feature_dim;
  size_t signal_dim; /* 0 = every coordinate carries signal */
  size_t samples_per_source_class;
  size_t samples_per_target_class;
  double class_separation;
  double target_perturbation;
  double noise_scale;
  int shared_perturbation;
  uint64_t seed;
} gwsdr_synthetic_spec;

GWSDR_API void gwsdr_synthetic_spec_default(gwsdr_synthetic_spec* spec);

/* ground_truth may be NULL; otherwise it receives num_target_classes entries. */
GWSDR_API gwsdr_status gwsdr_generate_synthetic(const gwsdr_synthetic_spec* spec,
                                                gwsdr_dataset** source, gwsdr_dataset** target,
                                                size_t* ground_truth);

GWSDR_API gwsdr_status gwsdr_dataset_load(const char* path, gwsdr_dataset** out);
GWSDR_API gwsdr_status gwsdr_dataset_write(const gwsdr_dataset* ds, const char* path);
GWSDR_API gwsdr_status gwsdr_dataset_split(const gwsdr_dataset* ds, double train_fraction,
                                           uint64_t seed, gwsdr_dataset** train,
                                           gwsdr_dataset** test);
GWSDR_API size_t gwsdr_dataset_size(const gwsdr_dataset* ds);
GWSDR_API size_t gwsdr_dataset_num_classes(const gwsdr_dataset* ds);
GWSDR_API size_t gwsdr_dataset_feature_dim(const gwsdr_dataset* ds);
/* NULL when out of range. */
GWSDR_API const char* gwsdr_dataset_class_name(const gwsdr_dataset* ds, size_t index);
GWSDR_API void gwsdr_dataset_free(gwsdr_dataset* ds);

/* --- models ------------------------------------------------------------- */

typedef struct gwsdr_train_config {
  size_t epochs;
  size_t batch_size;
  double learning_rate;
  double l2_weight;
  uint64_t seed;
} gwsdr_train_config;

GWSDR_API void gwsdr_train_config_default(gwsdr_train_config* cfg);

GWSDR_API gwsdr_status gwsdr_model_init(const size_t* layer_sizes, size_t count, uint64_t seed,
                                        gwsdr_model** out);
GWSDR_API gwsdr_status gwsdr_model_train(const gwsdr_model* init, const gwsdr_dataset* data,
                                         const gwsdr_train_config* cfg, gwsdr_model** out);
GWSDR_API gwsdr_status gwsdr_model_load(const char* path, gwsdr_model** out);
GWSDR_API gwsdr_status gwsdr_model_write(const gwsdr_model* model, const char* path);
GWSDR_API gwsdr_status gwsdr_model_evaluate(const gwsdr_model* model, const gwsdr_dataset* data,
                                            double* accuracy);
GWSDR_API size_t gwsdr_model_parameter_count(const gwsdr_model* model);
GWSDR_API void gwsdr_model_free(gwsdr_model* model);

/* --- mode matching ------------------------------------------------------ */

/* method is "count" or "likelihood"; samples_per_class 0 picks automatically.
 * target names the model's classes and may be NULL. */
GWSDR_API gwsdr_status gwsdr_match(const gwsdr_model* model, const gwsdr_dataset* source,
                                   const gwsdr_dataset* target, const char* method,
                                   size_t samples_per_class, uint64_t seed,
                                   gwsdr_match_report** out);
GWSDR_API size_t gwsdr_match_report_size(const gwsdr_match_report* report);
GWSDR_API const char* gwsdr_match_report_target_name(const gwsdr_match_report* report, size_t q);
GWSDR_API const char* gwsdr_match_report_source_name(const gwsdr_match_report* report, size_t q);
GWSDR_API size_t gwsdr_match_report_source_index(const gwsdr_match_report* report, size_t q);
GWSDR_API size_t gwsdr_match_report_warning_count(const gwsdr_match_report* report);
GWSDR_API const char* gwsdr_match_report_warning(const gwsdr_match_report* report, size_t i);
GWSDR_API gwsdr_status gwsdr_match_report_write(const gwsdr_match_report* report,
                                                const char* path);
GWSDR_API void gwsdr_match_report_free(gwsdr_match_report* report);

/* --- experiments -------------------------------------------------------- */

typedef void (*gwsdr_line_callback)(const char* line, void* user);

/* workers 0 keeps the config's value. on_warning (may be NULL) receives each
 * run warning. GWSDR_BUDGET_EXHAUSTED means the outputs were written but are
 * flagged as truncated. */
GWSDR_API gwsdr_status gwsdr_run_pipeline(const char* config_path, const char* out_dir,
                                          size_t workers, gwsdr_line_callback on_warning,
                                          void* user);
GWSDR_API gwsdr_status gwsdr_run_sweep_augment(const char* config_path, const char* out_dir,
                                               size_t workers, gwsdr_line_callback on_warning,
                                               void* user);
GWSDR_API gwsdr_status gwsdr_run_sweep_iterate(const char* config_path, const char* out_dir,
                                               size_t workers, gwsdr_line_callback on_warning,
                                               void* user);

/* Runs the acceptance suite against out_dir, calling on_line once per
 * criterion. all_passed may be NULL. */
GWSDR_API gwsdr_status gwsdr_check(const char* out_dir, gwsdr_line_callback on_line, void* user,
                                   int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* GWSDR_GWSDR_H_ */
