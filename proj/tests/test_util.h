// Copyright 2026 The Authors.
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


#ifndef HMCIL_TESTS_TEST_UTIL_H_
#define HMCIL_TESTS_TEST_UTIL_H_

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "hmcil/matrix.h"
#include "hmcil/nn.h"

namespace hmcil::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols,
                            std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = n(rng);
  return m;
}

// Fills every parameter with N(0, scale^2) so ReLUs are not trivially dead.
inline Network random_network(std::vector<std::size_t> widths, std::mt19937_64& rng,
                              double scale = 0.7) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer{random_matrix(widths[l + 1], widths[l], rng, scale),
                     std::vector<double>(widths[l + 1]),
                     l + 2 < widths.size() ? Activation::kRelu : Activation::kIdentity};
    std::normal_distribution<double> n(0.0, 0.1);
    for (double& b : layer.bias) b = n(rng);
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

inline std::vector<int> random_labels(std::size_t n, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, classes - 1);
  std::vector<int> out(n);
  for (int& y : out) y = u(rng);
  return out;
}

inline std::vector<Sample> samples_from(const Matrix& x, const std::vector<int>& y) {
  std::vector<Sample> out;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    out.push_back({{row.begin(), row.end()}, y[r], false});
  }
  return out;
}

// Central difference of f at *p.
inline double central_difference(double* p, const std::function<double()>& f,
                                 double h = 1e-5) {
  const double saved = *p;
  *p = saved + h;
  const double up = f();
  *p = saved - h;
  const double down = f();
  *p = saved;
  return (up - down) / (2.0 * h);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("hmcil-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
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

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

}  // namespace hmcil::testing

#endif  // HMCIL_TESTS_TEST_UTIL_H_
