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

//
// Real exemplar selection
//
// greedy_select chooses real samples that, together with a fixed synthetic
// set, minimize the distillation objective at the end-of-task model. Every
// round scans all class-eligible candidates and adds the argmin (lowest
// index on ties); a class becomes ineligible once it holds k_real picks.
//
// The objective over the union U_c = R[A]_c + S_c of each class is averaged
// uniformly over the classes present in R. A class whose union is still
// empty scores |mean_R|^2 under dm (the empty mean is taken as zero) and the
// worst case under dsa.
//

#ifndef HMCIL_SELECTOR_H_
#define HMCIL_SELECTOR_H_

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmcil/cdd.h"
#include "hmcil/nn.h"

namespace hmcil {

enum class SelectorKind { kGreedy, kHerding, kRandom };

SelectorKind parse_selector(std::string_view name);
std::string_view to_string(SelectorKind kind);

struct SelectionResult {
  std::vector<std::size_t> indices;  // into the real sample list, pick order
  std::vector<double> trace;         // objective after each pick
  std::map<int, std::size_t> per_class_counts;

  // Throws StateError on duplicate indices, cap overflow or a trace of the
  // wrong length.
  void validate(std::size_t k_real) const;
};

SelectionResult greedy_select(std::span<const Sample> real,
                              const SyntheticSet& synthetic,
                              const Network& model, std::size_t k_real,
                              Objective objective = Objective::kDm,
                              LossKind loss = LossKind::kCrossEntropy);

// Classic herding per class, classes in ascending order. The trace records
// the dm objective (no synthetic set) after each pick.
SelectionResult herding_select(std::span<const Sample> real,
                               const Network& model, std::size_t k_real);

// Seeded, class-stratified uniform sample. The trace holds the dm objective
// when a model is given and NaN otherwise.
SelectionResult random_select(std::span<const Sample> real, std::size_t k_real,
                              std::uint64_t seed,
                              const Network* model = nullptr);

// Direct (non-incremental) evaluation of the selection objective.
double selection_objective(std::span<const Sample> real,
                           const SyntheticSet& synthetic, const Network& model,
                           std::span<const std::size_t> indices,
                           Objective objective = Objective::kDm,
                           LossKind loss = LossKind::kCrossEntropy);

nlohmann::json to_json(const SelectionResult& result);
SelectionResult selection_from_json(const nlohmann::json& j);

}  // namespace hmcil

#endif  // HMCIL_SELECTOR_H_
