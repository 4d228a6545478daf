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
// Continual data distillation
//
// Synthetic exemplars are learned by gradient descent on a distillation
// objective averaged over a set of model checkpoints. During training the
// set is the sliding window of the most recent epochs; distill_full runs
// the same descent over a complete checkpoint history.
//
// Objectives (all per class, averaged uniformly over classes and
// checkpoints):
//   dm   squared distance between mean embeddings of synthetic and real
//   dsa  negated layer-wise cosine similarity of parameter gradients
// "ftd" and "datadam" parse as objective names but are not implemented;
// requesting them raises ConfigError.
//

#ifndef HMCIL_CDD_H_
#define HMCIL_CDD_H_

#include <map>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "hmcil/checkpoint_window.h"
#include "hmcil/matrix.h"
#include "hmcil/nn.h"

namespace hmcil {

enum class Objective { kDm, kDsa, kFtd, kDataDam };

Objective parse_objective(std::string_view name);
std::string_view to_string(Objective objective);
bool is_implemented(Objective objective);

// Real features grouped by class label.
using ClassSamples = std::map<int, Matrix>;
ClassSamples group_by_class(std::span<const Sample> samples);

class SyntheticSet {
 public:
  std::map<int, Matrix> per_class;  // class -> m x d exemplars
  std::size_t step_count = 0;
  // Momentum buffer of the exemplar optimizer; not part of the value.
  std::map<int, Matrix> velocity;

  std::vector<int> classes() const;
  // Exemplars per class; 0 when empty. Throws StateError if classes differ.
  std::size_t per_class_count() const;
  std::size_t dim() const;
  std::size_t total() const;
  std::vector<Sample> to_samples() const;
  // Finiteness, equal class sizes and, when `clamped`, the [0,1] range.
  void validate(bool clamped) const;

  bool operator==(const SyntheticSet& o) const {
    return per_class == o.per_class && step_count == o.step_count;
  }
};

// m randomly chosen real samples of every class in `classes`.
SyntheticSet init_synthetic(std::span<const Sample> real,
                            std::span<const int> classes, std::size_t m,
                            std::mt19937_64& rng);

double dm_loss(const SyntheticSet& synthetic, std::span<const Sample> real,
               std::span<const Network> checkpoints);

struct DsaValue {
  double value = 0.0;
  // Set when a gradient had zero norm; that layer scored the worst case.
  bool degenerate = false;
};

DsaValue dsa_loss(const SyntheticSet& synthetic, std::span<const Sample> real,
                  std::span<const Network> checkpoints,
                  LossKind loss = LossKind::kCrossEntropy);

// Worst per-layer score of the dsa objective (cosine of -1).
inline constexpr double kDsaWorst = 1.0;

// Negated cosine between matching layers of two gradients, averaged over
// layers. This is the per-(class, checkpoint) term of dsa.
DsaValue gradient_match(const Network& a, const Network& b);

struct ObjectiveGradient {
  double value = 0.0;
  bool degenerate = false;
  std::map<int, Matrix> grad;  // d(value)/d(exemplars), keyed like per_class
};

ObjectiveGradient objective_gradient(Objective objective,
                                     const SyntheticSet& synthetic,
                                     const ClassSamples& real,
                                     std::span<const Network> checkpoints,
                                     LossKind loss = LossKind::kCrossEntropy);

struct CddSettings {
  double lr = 0.1;
  double momentum = 0.0;
  Objective objective = Objective::kDm;
  bool clamp = false;
  LossKind loss = LossKind::kCrossEntropy;
};

// One descent step on the window-averaged objective. Returns the objective
// value at the pre-step exemplars.
double cdd_step(SyntheticSet& synthetic, const ClassSamples& real,
                const CheckpointWindow& window, const CddSettings& settings);

// `steps` descent steps on the objective averaged over all checkpoints.
SyntheticSet distill_full(SyntheticSet init, std::span<const Sample> real,
                          std::span<const Network> checkpoints,
                          std::size_t steps, const CddSettings& settings);

}  // namespace hmcil

#endif  // HMCIL_CDD_H_
