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

// Regenerates the benchmark outputs and prints one line per criterion.
//
//   gwsdr_acceptance [--out DIR] [--reuse]
//
// Without --out the runs go to a fresh temporary directory. --reuse skips the
// runs and checks whatever DIR already holds.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "gwsdr/acceptance.hpp"
#include "gwsdr/experiment.hpp"

namespace fs = std::filesystem;
using namespace gwsdr;

int main(int argc, char** argv) {
  CLI::App app{"gwsdr acceptance suite"};
  std::string out;
  std::string configs = GWSDR_CONFIG_DIR;
  bool reuse = false;
  app.add_option("--out", out, "output directory (default: a temporary one)");
  app.add_option("--configs", configs, "directory with the benchmark configs")
      ->capture_default_str();
  app.add_flag("--reuse", reuse, "check existing outputs without rerunning");
  CLI11_PARSE(app, argc, argv);

  bool scratch = false;
  if (out.empty()) {
    std::string tmpl = (fs::temp_directory_path() / "gwsdr-acceptance-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) {
      std::fprintf(stderr, "cannot create a temporary directory\n");
      return 2;
    }
    out = tmpl;
    scratch = true;
  }

  if (!reuse) {
    try {
      const fs::path dir(configs);
      run_pipeline_experiment(load_experiment_config(dir / "pipeline.conf"), out);
      run_augment_experiment(load_experiment_config(dir / "sweep-augment.conf"), out);
      run_iterate_experiment(load_experiment_config(dir / "sweep-iterate.conf"), out);
    } catch (const std::exception& e) {
      // The checker reports what is missing.
      std::fprintf(stderr, "run failed: %s\n", e.what());
    }
  }

  int failed = 0;
  for (const auto& r : run_acceptance(out)) {
    std::printf("%s\n", format_result(r).c_str());
    failed += !r.passed;
  }
  std::printf("%d/11 criteria passed\n", 11 - failed);
  if (scratch) {
    std::error_code ec;
    fs::remove_all(out, ec);
  }
  return failed ? 1 : 0;
}
