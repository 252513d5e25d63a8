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

// gwsdr command-line front end. Talks to the library only through gwsdr.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gwsdr/gwsdr.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartial = 3;

int exit_code(gwsdr_status s) {
  switch (s) {
    case GWSDR_OK: return kExitOk;
    case GWSDR_BUDGET_EXHAUSTED: return kExitPartial;
    case GWSDR_INTERNAL: return kExitFailed;
    default: return kExitUsage;
  }
}

int report(gwsdr_status s) {
  if (s != GWSDR_OK)
    std::fprintf(stderr, "gwsdr: %s: %s\n", gwsdr_status_name(s), gwsdr_last_error());
  return exit_code(s);
}

void print_warning(const char* line, void*) { std::fprintf(stderr, "warning: %s\n", line); }
void print_line(const char* line, void*) { std::printf("%s\n", line); }

// Frees a handle on scope exit.
template <class T, void (*Free)(T*)>
struct Owned {
  T* p = nullptr;
  Owned() = default;
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  ~Owned() { Free(p); }
};
using Dataset = Owned<gwsdr_dataset, gwsdr_dataset_free>;
using Model = Owned<gwsdr_model, gwsdr_model_free>;
using Report = Owned<gwsdr_match_report, gwsdr_match_report_free>;

struct GenerateArgs {
  gwsdr_synthetic_spec spec{};
  std::string out = ".";
  double split = 0.0;
};

int cmd_generate(GenerateArgs& a) {
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) {
    std::fprintf(stderr, "gwsdr: cannot create %s: %s\n", a.out.c_str(), ec.message().c_str());
    return kExitUsage;
  }
  Dataset source, target;
  std::vector<size_t> truth(a.spec.num_target_classes);
  if (auto s = gwsdr_generate_synthetic(&a.spec, &source.p, &target.p, truth.data()))
    return report(s);
  const fs::path dir(a.out);
  if (auto s = gwsdr_dataset_write(source.p, (dir / "source.txt").c_str())) return report(s);
  if (auto s = gwsdr_dataset_write(target.p, (dir / "target.txt").c_str())) return report(s);
  if (a.split > 0.0) {
    Dataset train, test;
    if (auto s = gwsdr_dataset_split(target.p, a.split, a.spec.seed, &train.p, &test.p))
      return report(s);
    if (auto s = gwsdr_dataset_write(train.p, (dir / "target_train.txt").c_str()))
      return report(s);
    if (auto s = gwsdr_dataset_write(test.p, (dir / "target_test.txt").c_str()))
      return report(s);
  }
  std::ofstream map(dir / "ground_truth.csv", std::ios::binary);
  map << "target_class,source_class\n";
  for (size_t q = 0; q < truth.size(); ++q)
    map << gwsdr_dataset_class_name(target.p, q) << ','
        << gwsdr_dataset_class_name(source.p, truth[q]) << '\n';
  if (!map) {
    std::fprintf(stderr, "gwsdr: cannot write the ground-truth map\n");
    return kExitUsage;
  }
  return kExitOk;
}

struct TrainArgs {
  std::string data, test, out;
  size_t hidden = 16;
  gwsdr_train_config cfg{};
};

int cmd_train(TrainArgs& a) {
  Dataset data;
  if (auto s = gwsdr_dataset_load(a.data.c_str(), &data.p)) return report(s);
  const size_t sizes[] = {gwsdr_dataset_feature_dim(data.p), a.hidden,
                          gwsdr_dataset_num_classes(data.p)};
  Model init, model;
  if (auto s = gwsdr_model_init(sizes, 3, a.cfg.seed, &init.p)) return report(s);
  if (auto s = gwsdr_model_train(init.p, data.p, &a.cfg, &model.p)) return report(s);
  if (auto s = gwsdr_model_write(model.p, a.out.c_str())) return report(s);
  if (!a.test.empty()) {
    Dataset test;
    double acc = 0.0;
    if (auto s = gwsdr_dataset_load(a.test.c_str(), &test.p)) return report(s);
    if (auto s = gwsdr_model_evaluate(model.p, test.p, &acc)) return report(s);
    std::printf("test_accuracy %.6f\n", acc);
  }
  return kExitOk;
}

struct MatchArgs {
  std::string model, source, target, out, method = "count";
  size_t samples = 0;
  uint64_t seed = 0;
};

int cmd_match(MatchArgs& a) {
  Model model;
  Dataset source, target;
  if (auto s = gwsdr_model_load(a.model.c_str(), &model.p)) return report(s);
  if (auto s = gwsdr_dataset_load(a.source.c_str(), &source.p)) return report(s);
  if (!a.target.empty())
    if (auto s = gwsdr_dataset_load(a.target.c_str(), &target.p)) return report(s);
  Report r;
  if (auto s = gwsdr_match(model.p, source.p, target.p, a.method.c_str(), a.samples, a.seed, &r.p))
    return report(s);
  if (!a.out.empty())
    if (auto s = gwsdr_match_report_write(r.p, a.out.c_str())) return report(s);
  for (size_t i = 0; i < gwsdr_match_report_warning_count(r.p); ++i)
    print_warning(gwsdr_match_report_warning(r.p, i), nullptr);
  for (size_t q = 0; q < gwsdr_match_report_size(r.p); ++q)
    std::printf("%s -> %s\n", gwsdr_match_report_target_name(r.p, q),
                gwsdr_match_report_source_name(r.p, q));
  return kExitOk;
}

struct RunArgs {
  std::string config, out;
  size_t workers = 0;
};

using RunFn = gwsdr_status (*)(const char*, const char*, size_t, gwsdr_line_callback, void*);

int cmd_run(RunFn fn, const RunArgs& a) {
  const auto s = fn(a.config.c_str(), a.out.c_str(), a.workers, print_warning, nullptr);
  if (s == GWSDR_BUDGET_EXHAUSTED)
    std::fprintf(stderr, "gwsdr: partial results in %s: %s\n", a.out.c_str(), gwsdr_last_error());
  else if (s == GWSDR_OK)
    std::printf("wrote %s\n", a.out.c_str());
  else
    return report(s);
  return exit_code(s);
}

int cmd_check(const std::string& out) {
  int all = 0;
  if (auto s = gwsdr_check(out.c_str(), print_line, nullptr, &all)) return report(s);
  return all ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gwsdr: guided weak supervision with directional regularization"};
  app.require_subcommand(1);

  GenerateArgs gen;
  gwsdr_synthetic_spec_default(&gen.spec);
  auto* g = app.add_subcommand("generate", "write a synthetic source/target pair");
  g->add_option("--source-classes", gen.spec.num_source_classes, "N")->capture_default_str();
  g->add_option("--target-classes", gen.spec.num_target_classes, "M")->capture_default_str();
  g->add_option("--dim", gen.spec.feature_dim, "feature dimension")->capture_default_str();
  g->add_option("--signal-dim", gen.spec.signal_dim, "coordinates carrying class signal (0 = all)")
      ->capture_default_str();
  g->add_option("--source-samples", gen.spec.samples_per_source_class, "samples per source class")
      ->capture_default_str();
  g->add_option("--target-samples", gen.spec.samples_per_target_class, "samples per target class")
      ->capture_default_str();
  g->add_option("--separation", gen.spec.class_separation, "minimum distance between class means")
      ->capture_default_str();
  g->add_option("--perturbation", gen.spec.target_perturbation, "target mean displacement")
      ->capture_default_str();
  g->add_option("--noise", gen.spec.noise_scale, "per-coordinate noise sigma")
      ->capture_default_str();
  bool shared = false;
  g->add_flag("--shared", shared, "one common displacement direction for all target classes");
  g->add_option("--split", gen.split, "also write target_train/target_test with this train fraction");
  g->add_option("--seed", gen.spec.seed, "generator seed")->capture_default_str();
  g->add_option("--out", gen.out, "output directory")->capture_default_str();

  TrainArgs tr;
  gwsdr_train_config_default(&tr.cfg);
  auto* t = app.add_subcommand("train", "train a classifier and write it");
  t->add_option("--data", tr.data, "training dataset")->required();
  t->add_option("--test", tr.test, "optional test dataset; prints accuracy");
  t->add_option("--hidden", tr.hidden, "hidden layer width")->capture_default_str();
  t->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  t->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  t->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
  t->add_option("--l2", tr.cfg.l2_weight)->capture_default_str();
  t->add_option("--seed", tr.cfg.seed, "initialization and batch-order seed")->capture_default_str();
  t->add_option("--out", tr.out, "model file")->required();

  MatchArgs ma;
  auto* m = app.add_subcommand("match", "match target classes to source classes");
  m->add_option("--model", ma.model, "target classifier")->required();
  m->add_option("--source", ma.source, "source dataset")->required();
  m->add_option("--target", ma.target, "target dataset (class names only)");
  m->add_option("--method", ma.method, "count or likelihood")->capture_default_str();
  m->add_option("--samples", ma.samples, "samples per source class (0 = auto)")
      ->capture_default_str();
  m->add_option("--seed", ma.seed, "subsampling seed")->capture_default_str();
  m->add_option("--out", ma.out, "report table file");

  RunArgs pipe, aug, iter;
  auto add_run = [&app](const char* name, const char* help, RunArgs& a) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", a.config, "run config")->required();
    c->add_option("--out", a.out, "output directory")->required();
    c->add_option("--workers", a.workers, "parallel replicates (0 = from config)");
    return c;
  };
  auto* p = add_run("pipeline", "baseline, matching, augmentation and retraining", pipe);
  auto* sa = add_run("sweep-augment", "accuracy against augmentation budget", aug);
  auto* si = add_run("sweep-iterate", "accuracy across augmentation rounds", iter);

  std::string check_dir;
  auto* ch = app.add_subcommand("check", "run the acceptance suite against an output directory");
  ch->add_option("--out", check_dir, "directory holding the pipeline and sweep outputs")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  gen.spec.shared_perturbation = shared ? 1 : 0;

  if (*g) return cmd_generate(gen);
  if (*t) return cmd_train(tr);
  if (*m) return cmd_match(ma);
  if (*p) return cmd_run(gwsdr_run_pipeline, pipe);
  if (*sa) return cmd_run(gwsdr_run_sweep_augment, aug);
  if (*si) return cmd_run(gwsdr_run_sweep_iterate, iter);
  if (*ch) return cmd_check(check_dir);
  return kExitUsage;
}
