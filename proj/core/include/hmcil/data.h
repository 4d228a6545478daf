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

#ifndef HMCIL_DATA_H_
#define HMCIL_DATA_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmcil/nn.h"

namespace hmcil {

enum class Protocol { kZeroBase, kHalfBase };

Protocol parse_protocol(std::string_view name);  // "zero-base" | "half-base"
std::string_view to_string(Protocol protocol);

struct TaskSpec {
  int id = 0;  // 1-based
  std::vector<int> classes;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Class-incremental stream. Labels are renumbered so that task 1 owns
// 0..|C_1|-1, task 2 the next block, and so on; class_order maps a
// stream label back to the label of the source dataset.
struct TaskStream {
  std::vector<TaskSpec> tasks;
  std::size_t feature_dim = 0;
  std::size_t total_classes = 0;
  Protocol protocol = Protocol::kZeroBase;
  std::size_t phases = 0;
  std::uint64_t seed = 0;
  std::vector<int> class_order;

  // |C_{1:t}|, t is 1-based.
  std::size_t classes_upto(std::size_t t) const;
  // Throws DataError if an invariant is broken.
  void validate() const;
};

// Task sizes for `classes` under a protocol (zero-base: `phases` tasks of
// near-equal size; half-base: ceil(classes/2) then `phases` tasks).
std::vector<std::size_t> task_sizes(std::size_t classes, Protocol protocol,
                                    std::size_t phases);

struct GaussianOptions {
  std::size_t classes = 10;
  std::size_t per_class = 125;
  std::size_t dim = 16;
  double spread = 1.0;
  std::uint64_t seed = 0;
  // Class means are drawn from N(0, mean_scale^2 I).
  double mean_scale = 1.0;
};

// Isotropic Gaussian clusters, one per class. Samples are grouped by class.
std::vector<Sample> gen_gaussian_samples(const GaussianOptions& options);

TaskStream gen_gaussian_stream(const GaussianOptions& options,
                               Protocol protocol = Protocol::kZeroBase,
                               std::size_t phases = 5);

// Shuffles the class order with `seed`, renumbers labels, assigns classes
// to tasks and splits each class 80/20 into train/test.
TaskStream split_stream(std::span<const Sample> samples, Protocol protocol,
                        std::size_t phases, std::uint64_t seed);

enum class DataFormat { kCsv, kIdx };

DataFormat parse_data_format(std::string_view name);

struct Dataset {
  std::vector<Sample> samples;
  std::size_t dim = 0;
  // label_names[i] is the source label that was remapped to i.
  std::vector<std::string> label_names;
};

// CSV: header row, feature columns then a `label` column. IDX: image file
// plus a paired label file (derived from the image path when omitted).
// Columns with values outside [0,1] are min-max scaled to [0,1].
Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const std::optional<std::filesystem::path>& labels_path =
                         std::nullopt);

void write_csv(const std::filesystem::path& path,
               std::span<const Sample> samples);

// Writes features as an IDX double tensor (n x dim) and labels as IDX ubyte
// when every label fits, else int32.
void write_idx(const std::filesystem::path& images,
               const std::filesystem::path& labels,
               std::span<const Sample> samples);

// MNIST naming: "...-images-idx3-ubyte" -> "...-labels-idx1-ubyte".
std::filesystem::path default_idx_labels_path(
    const std::filesystem::path& images);

}  // namespace hmcil

#endif  // HMCIL_DATA_H_
