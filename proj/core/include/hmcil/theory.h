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

#ifndef HMCIL_THEORY_H_
#define HMCIL_THEORY_H_

#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace hmcil {

// Iterates of eps <- rho / (1 - eps), the tight form of the bound that
// carries the per-task approximation error across tasks.
struct EpsilonTrace {
  double rho = 0.0;
  double eps0 = 0.0;
  // trace[0] == eps0. Iteration stops at the first value outside [0, 1),
  // which is kept as the last entry.
  std::vector<double> trace;
  std::optional<std::size_t> diverged_at;

  bool diverged() const { return diverged_at.has_value(); }
};

// Throws DomainError if eps0 is outside [0, 1) or rho is negative.
EpsilonTrace iterate_epsilon(double rho, double eps0, std::size_t steps);

// Roots of eps^2 - eps + rho = 0, i.e. (1 -+ sqrt(1 - 4 rho)) / 2, when
// rho <= 1/4.
std::optional<std::pair<double, double>> fixed_points(double rho);

// CSV with columns rho,eps0,step,epsilon,diverged for every grid pair.
void write_epsilon_csv(std::ostream& out, std::span<const double> rhos,
                       std::span<const double> eps0s, std::size_t steps);

}  // namespace hmcil

#endif  // HMCIL_THEORY_H_
