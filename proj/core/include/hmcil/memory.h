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

#ifndef HMCIL_MEMORY_H_
#define HMCIL_MEMORY_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hmcil/cdd.h"
#include "hmcil/nn.h"

namespace hmcil {

// Exemplars contributed by one task.
struct TaskMemory {
  int task = 0;
  std::vector<int> classes;
  SyntheticSet synthetic;
  std::vector<Sample> real;
  // Positions of `real` in the task's training list.
  std::vector<std::size_t> real_indices;
};

// Per-class-budgeted store of synthetic and real exemplars across tasks.
// Every stored class holds exactly synthetic_per_class() synthetic and
// real_per_class() real exemplars, summing to k.
class HybridMemory {
 public:
  HybridMemory(std::size_t k, double synthetic_ratio);

  // round(k * ratio) and the remainder.
  static std::size_t synthetic_share(std::size_t k, double ratio);

  std::size_t k() const { return k_; }
  double synthetic_ratio() const { return ratio_; }
  std::size_t synthetic_per_class() const { return synthetic_share(k_, ratio_); }
  std::size_t real_per_class() const { return k_ - synthetic_per_class(); }

  const std::vector<TaskMemory>& tasks() const { return tasks_; }
  std::vector<int> stored_classes() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  // Tasks in order; within a task synthetic exemplars precede real ones.
  std::vector<Sample> exemplars() const;

  // Throws StateError unless every stored class holds exactly k exemplars
  // split as configured.
  void check_budget() const;

  // Appends a task's entry. Throws StateError on a class collision or a
  // budget violation; the memory is unchanged on error.
  void append(TaskMemory entry);

 private:
  std::size_t k_;
  double ratio_;
  std::vector<TaskMemory> tasks_;
};

HybridMemory merge(HybridMemory memory, TaskMemory entry);

// Uniform draw without replacement over all stored exemplars; returns a
// seeded permutation of the whole memory when batch_size >= size().
std::vector<Sample> replay_batch(const HybridMemory& memory,
                                 std::size_t batch_size, std::uint64_t seed);

// Directory layout: memory.json manifest plus task_<t>.bin (synthetic grid
// and real rows) and task_<t>.json (index) per task.
void save_memory(const HybridMemory& memory, const std::filesystem::path& dir);
HybridMemory load_memory(const std::filesystem::path& dir);

}  // namespace hmcil

#endif  // HMCIL_MEMORY_H_
