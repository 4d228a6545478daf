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

#include "hmcil/theory.h"

#include <cmath>

#include <fmt/format.h>

#include "hmcil/errors.h"

namespace hmcil {

EpsilonTrace iterate_epsilon(double rho, double eps0, std::size_t steps) {
  if (!(eps0 >= 0.0 && eps0 < 1.0)) {
    throw DomainError(fmt::format("eps0 = {} is outside [0, 1)", eps0));
  }
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw DomainError(fmt::format("rho = {} must be finite and >= 0", rho));
  }
  if (steps < 1) throw DomainError("steps must be >= 1");
  EpsilonTrace out{rho, eps0, {eps0}, std::nullopt};
  double eps = eps0;
  for (std::size_t i = 1; i <= steps; ++i) {
    eps = rho / (1.0 - eps);
    out.trace.push_back(eps);
    if (!(eps >= 0.0 && eps < 1.0)) {
      out.diverged_at = i;
      break;
    }
  }
  return out;
}

std::optional<std::pair<double, double>> fixed_points(double rho) {
  const double disc = 1.0 - 4.0 * rho;
  if (!(disc >= 0.0)) return std::nullopt;
  const double root = std::sqrt(disc);
  return std::make_pair((1.0 - root) / 2.0, (1.0 + root) / 2.0);
}

void write_epsilon_csv(std::ostream& out, std::span<const double> rhos,
                       std::span<const double> eps0s, std::size_t steps) {
  out << "rho,eps0,step,epsilon,diverged\n";
  for (double rho : rhos) {
    for (double eps0 : eps0s) {
      const EpsilonTrace t = iterate_epsilon(rho, eps0, steps);
      for (std::size_t i = 0; i < t.trace.size(); ++i) {
        const bool bad = t.diverged_at && *t.diverged_at == i;
        out << fmt::format("{:.17g},{:.17g},{},{:.17g},{}\n", rho, eps0, i,
                           t.trace[i], bad ? 1 : 0);
      }
    }
  }
}

}  // namespace hmcil
