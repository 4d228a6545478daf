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
// Replay trainer with hybrid memory
//
// For task t the model is trained for N epochs on the task's data plus the
// stored memory. A snapshot is cached after every epoch in a window of the
// tau most recent epochs; once the window has been filled (epoch > tau),
// the task's synthetic exemplars take cdd_steps_per_epoch descent steps on
// the window-averaged objective. After the last epoch real exemplars are
// selected at the final model and the task's entry is merged into memory.
//

#ifndef HMCIL_TRAINER_H_
#define HMCIL_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmcil/cdd.h"
#include "hmcil/data.h"
#include "hmcil/memory.h"
#include "hmcil/nn.h"
#include "hmcil/selector.h"

namespace hmcil {

enum class ScheduleKind { kPiecewise, kCosine };

ScheduleKind parse_schedule(std::string_view name);
std::string_view to_string(ScheduleKind kind);

struct LrSchedule {
  ScheduleKind kind = ScheduleKind::kPiecewise;
  // Piecewise: lr is multiplied by gamma once each milestone epoch passes.
  std::vector<std::size_t> milestones{15, 25};
  double gamma = 0.1;

  // Learning rate for 1-based `epoch` out of `total`. Cosine decays from
  // `base` towards zero over the run.
  double lr_at(double base, std::size_t epoch, std::size_t total) const;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t window = 4;
  std::size_t batch_size = 32;
  double lr = 0.05;
  LrSchedule schedule;
  double momentum = 0.9;
  double weight_decay = 2e-4;
  std::size_t cdd_steps_per_epoch = 20;
  double cdd_lr = 0.1;
  double cdd_momentum = 0.5;
  std::size_t exemplars_per_class = 20;
  double synthetic_ratio = 0.5;
  Objective objective = Objective::kDm;
  SelectorKind selector = SelectorKind::kGreedy;
  bool replay = true;
  bool distill = false;
  double distill_temperature = 2.0;
  bool clamp = false;
  std::vector<std::size_t> hidden{64};
  std::uint64_t seed = 0;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

struct EpochLog {
  int task = 0;
  int epoch = 0;
  double train_loss = 0.0;
  std::size_t window_size = 0;
  std::optional<double> cdd_loss;  // only for epochs that ran CDD steps
};

nlohmann::json to_json(const EpochLog& log);

struct TaskResult {
  Network model;
  HybridMemory memory;
  std::vector<EpochLog> log;
  SyntheticSet synthetic_init;
  SelectionResult selection;
};

// Derives an independent seed per (seed, purpose, task).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t task);

// Runs one task (`t` is 1-based). The model's head is grown to cover
// C_{1:t} if needed.
TaskResult train_task(Network model, const TaskStream& stream, std::size_t t,
                      HybridMemory memory, const TrainConfig& config);

// Percentage of correct argmax predictions over the first `num_classes`
// logit columns (lowest index wins ties).
double accuracy_percent(const Matrix& logits, std::span<const int> labels,
                        std::size_t num_classes);

// AA (in percent) on the union of the test sets of tasks 1..t, with no task
// identity: argmax over all classes seen so far.
double evaluate(const Network& model, const TaskStream& stream, std::size_t t);

struct StreamRun {
  std::vector<double> per_task_aa;
  Network model;
  HybridMemory memory{1, 0.0};
  std::vector<EpochLog> log;
};

using TaskCallback =
    std::function<void(std::size_t t, const TaskResult& result, double aa)>;

// All tasks in order from a freshly initialized model. Throws StateError if
// the memory budget |C_{1:t}| * k is broken after any task.
StreamRun run_stream(const TaskStream& stream, const TrainConfig& config,
                     const TaskCallback& on_task = {});

}  // namespace hmcil

#endif  // HMCIL_TRAINER_H_
