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
// Experiment runner
//
// An experiment is one method on one stream over several seeds. Configs are
// plain `key = value` files; every key has a default and the resolved
// config is written next to the results.
//
// Output layout under output_dir:
//   config.txt          resolved config
//   summary.csv         one row per seed (schema_version first column)
//   aggregate.csv       mean and std over seeds
//   timing.csv          wall time per run, kept out of summary.csv
//   logs/*.jsonl        per-epoch training log
//   memory/<run>/       final hybrid memory
//   models/<run>.hmnn   final model
//   plots/aa_vs_task.svg
//

#ifndef HMCIL_EXPERIMENT_H_
#define HMCIL_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmcil/data.h"
#include "hmcil/selector.h"
#include "hmcil/trainer.h"

namespace hmcil {

inline constexpr int kCsvSchemaVersion = 1;

enum class Method {
  kRealHerding,
  kRealRandom,
  kSyntheticOnly,
  kHybridGreedy,
  kHybridRandom,
};

Method parse_method(std::string_view name);
std::string_view to_string(Method method);

struct StreamSource {
  std::string kind = "gaussian";  // gaussian | csv | idx
  GaussianOptions gaussian;
  std::filesystem::path path;
  std::optional<std::filesystem::path> labels_path;
  std::uint64_t data_seed = 0;
};

struct ExperimentConfig {
  StreamSource source;
  Protocol protocol = Protocol::kZeroBase;
  std::size_t phases = 5;
  Method method = Method::kHybridGreedy;
  // Unset fields take the method's value. Setting one that contradicts the
  // method is a ConfigError.
  std::optional<double> synthetic_ratio;
  std::optional<SelectorKind> selector;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "hmcil-out";
  std::size_t threads = 1;
  bool save_logs = true;
  bool save_memory = true;
  bool save_plots = true;
};

// Sets one field from its config-file spelling (`-` and `_` are
// interchangeable). Throws ConfigError for unknown keys or bad values.
void set_config_value(ExperimentConfig& config, std::string_view key,
                      std::string_view value);
std::vector<std::string> config_keys();
// Alternative spelling -> canonical key.
const std::map<std::string, std::string>& config_aliases();

// Parses `key = value` lines; `#` starts a comment.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies HMCIL_OUTPUT_DIR and HMCIL_THREADS when set.
void apply_env_overrides(ExperimentConfig& config);

// The train config a run actually uses, after method forcing. Throws
// ConfigError on an invalid method/ratio/selector combination.
TrainConfig resolve_train_config(const ExperimentConfig& config);

// Every key with its resolved value, one `key = value` per line.
std::string dump_config(const ExperimentConfig& config);

// The task stream for one seed.
TaskStream build_stream(const ExperimentConfig& config, std::uint64_t seed);

struct Metrics {
  double aia = 0.0;
  double laa = 0.0;
};

// Throws DomainError for an empty list.
Metrics compute_metrics(std::span<const double> per_task_aa);

struct RunReport {
  Method method = Method::kHybridGreedy;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double synthetic_ratio = 0.0;
  std::vector<double> per_task_aa;
  double aia = 0.0;
  double laa = 0.0;
  double wall_time_s = 0.0;
  std::size_t synthetic_allocated = 0;

  // Throws StateError if aia/laa disagree with per_task_aa.
  void validate() const;
};

// One training run without writing anything. `on_task` sees every task's
// result as it completes.
RunReport run_single(const ExperimentConfig& config, std::uint64_t seed,
                     StreamRun* run_out = nullptr,
                     const TaskCallback& on_task = {});

// All seeds, with outputs written under config.output_dir. Reports are in
// config.seeds order regardless of thread count.
std::vector<RunReport> run_experiment(const ExperimentConfig& config);

void write_summary_csv(std::ostream& out, std::span<const RunReport> reports);
void write_aggregate_csv(std::ostream& out, std::span<const RunReport> reports);

enum class SweepAxis { kBufferSize, kSyntheticRatio };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepRow {
  double value = 0.0;
  RunReport report;
};

// Runs every (value, method, seed). Values are sorted ascending and
// deduplicated; `methods` defaults to config.method. Outputs go to
// config.output_dir/sweep.csv, sweep_aggregate.csv and plots/.
std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            std::vector<double> values,
                            std::vector<Method> methods = {});

void write_sweep_csv(std::ostream& out, SweepAxis axis,
                     std::span<const SweepRow> rows);

}  // namespace hmcil

#endif  // HMCIL_EXPERIMENT_H_
