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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <unistd.h>

#include "gwsdr/dataset.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "gwsdr-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Two well separated Gaussian classes in `dim` dimensions.
inline gwsdr::LabeledDataset two_blobs(std::size_t per_class, std::size_t dim, double gap,
                                       unsigned seed) {
  gwsdr::LabeledDataset ds;
  ds.class_names = {"a", "b"};
  ds.feature_dim = dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      gwsdr::Sample s;
      s.label = c;
      for (std::size_t j = 0; j < dim; ++j) s.values.push_back((c ? gap : -gap) / 2 + n(rng));
      ds.samples.push_back(std::move(s));
    }
  return ds;
}

}  // namespace testing
