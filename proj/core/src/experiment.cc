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

#include "hmcil/experiment.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "hmcil/errors.h"
#include "hmcil/io.h"
#include "hmcil/memory.h"
#include "hmcil/svg.h"

namespace hmcil {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string canonical_key(std::string_view key) {
  std::string k = trim(key);
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, s));
  }
  return value;
}

std::size_t parse_size(std::string_view key, std::string_view text) {
  return parse_number<std::size_t>(key, text);
}

double parse_double(std::string_view key, std::string_view text) {
  const double v = parse_number<double>(key, text);
  if (!std::isfinite(v)) throw ConfigError(fmt::format("{} must be finite", key));
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, s));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view key,
                                         std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_size(key, item));
  return out;
}

// "0,1,2" or "0..4".
std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_number<std::uint64_t>("seeds", item));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>("seeds", item.substr(0, dots));
    const auto hi = parse_number<std::uint64_t>("seeds", item.substr(dots + 2));
    if (hi < lo) throw ConfigError("seeds: empty range " + item);
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("seeds: at least one seed is required");
  return out;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string fmt_double(double v) { return fmt::format("{}", v); }

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  using V = std::string_view;
  static const std::vector<Field> table = {
      {"source",
       [](C& c, V v) {
         const std::string s = trim(v);
         if (s != "gaussian" && s != "csv" && s != "idx") {
           throw ConfigError("source must be gaussian, csv or idx");
         }
         c.source.kind = s;
       },
       [](const C& c) { return c.source.kind; }},
      {"data", [](C& c, V v) { c.source.path = trim(v); },
       [](const C& c) { return c.source.path.string(); }},
      {"labels",
       [](C& c, V v) {
         const std::string s = trim(v);
         if (s.empty() || s == "auto") {
           c.source.labels_path.reset();
         } else {
           c.source.labels_path = s;
         }
       },
       [](const C& c) {
         return c.source.labels_path ? c.source.labels_path->string()
                                     : std::string("auto");
       }},
      {"data_seed",
       [](C& c, V v) { c.source.data_seed = parse_number<std::uint64_t>("data_seed", v); },
       [](const C& c) { return std::to_string(c.source.data_seed); }},
      {"classes", [](C& c, V v) { c.source.gaussian.classes = parse_size("classes", v); },
       [](const C& c) { return std::to_string(c.source.gaussian.classes); }},
      {"per_class",
       [](C& c, V v) { c.source.gaussian.per_class = parse_size("per_class", v); },
       [](const C& c) { return std::to_string(c.source.gaussian.per_class); }},
      {"dim", [](C& c, V v) { c.source.gaussian.dim = parse_size("dim", v); },
       [](const C& c) { return std::to_string(c.source.gaussian.dim); }},
      {"spread", [](C& c, V v) { c.source.gaussian.spread = parse_double("spread", v); },
       [](const C& c) { return fmt_double(c.source.gaussian.spread); }},
      {"mean_scale",
       [](C& c, V v) { c.source.gaussian.mean_scale = parse_double("mean_scale", v); },
       [](const C& c) { return fmt_double(c.source.gaussian.mean_scale); }},
      {"protocol", [](C& c, V v) { c.protocol = parse_protocol(trim(v)); },
       [](const C& c) { return std::string(to_string(c.protocol)); }},
      {"phases", [](C& c, V v) { c.phases = parse_size("phases", v); },
       [](const C& c) { return std::to_string(c.phases); }},
      {"method", [](C& c, V v) { c.method = parse_method(trim(v)); },
       [](const C& c) { return std::string(to_string(c.method)); }},
      {"synthetic_ratio",
       [](C& c, V v) {
         const std::string s = trim(v);
         if (s == "auto") {
           c.synthetic_ratio.reset();
         } else {
           c.synthetic_ratio = parse_double("synthetic_ratio", s);
         }
       },
       [](const C& c) { return fmt_double(resolve_train_config(c).synthetic_ratio); }},
      {"selector",
       [](C& c, V v) {
         const std::string s = trim(v);
         if (s == "auto") {
           c.selector.reset();
         } else {
           c.selector = parse_selector(s);
         }
       },
       [](const C& c) { return std::string(to_string(resolve_train_config(c).selector)); }},
      {"epochs", [](C& c, V v) { c.train.epochs = parse_size("epochs", v); },
       [](const C& c) { return std::to_string(c.train.epochs); }},
      {"window", [](C& c, V v) { c.train.window = parse_size("window", v); },
       [](const C& c) { return std::to_string(c.train.window); }},
      {"batch_size", [](C& c, V v) { c.train.batch_size = parse_size("batch_size", v); },
       [](const C& c) { return std::to_string(c.train.batch_size); }},
      {"lr", [](C& c, V v) { c.train.lr = parse_double("lr", v); },
       [](const C& c) { return fmt_double(c.train.lr); }},
      {"schedule", [](C& c, V v) { c.train.schedule.kind = parse_schedule(trim(v)); },
       [](const C& c) { return std::string(to_string(c.train.schedule.kind)); }},
      {"milestones",
       [](C& c, V v) { c.train.schedule.milestones = parse_size_list("milestones", v); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.train.schedule.milestones, ",")); }},
      {"gamma", [](C& c, V v) { c.train.schedule.gamma = parse_double("gamma", v); },
       [](const C& c) { return fmt_double(c.train.schedule.gamma); }},
      {"momentum", [](C& c, V v) { c.train.momentum = parse_double("momentum", v); },
       [](const C& c) { return fmt_double(c.train.momentum); }},
      {"weight_decay",
       [](C& c, V v) { c.train.weight_decay = parse_double("weight_decay", v); },
       [](const C& c) { return fmt_double(c.train.weight_decay); }},
      {"cdd_steps_per_epoch",
       [](C& c, V v) { c.train.cdd_steps_per_epoch = parse_size("cdd_steps_per_epoch", v); },
       [](const C& c) { return std::to_string(c.train.cdd_steps_per_epoch); }},
      {"cdd_lr", [](C& c, V v) { c.train.cdd_lr = parse_double("cdd_lr", v); },
       [](const C& c) { return fmt_double(c.train.cdd_lr); }},
      {"cdd_momentum",
       [](C& c, V v) { c.train.cdd_momentum = parse_double("cdd_momentum", v); },
       [](const C& c) { return fmt_double(c.train.cdd_momentum); }},
      {"k", [](C& c, V v) { c.train.exemplars_per_class = parse_size("k", v); },
       [](const C& c) { return std::to_string(c.train.exemplars_per_class); }},
      {"objective", [](C& c, V v) { c.train.objective = parse_objective(trim(v)); },
       [](const C& c) { return std::string(to_string(c.train.objective)); }},
      {"replay", [](C& c, V v) { c.train.replay = parse_bool("replay", v); },
       [](const C& c) { return std::string(c.train.replay ? "true" : "false"); }},
      {"distill", [](C& c, V v) { c.train.distill = parse_bool("distill", v); },
       [](const C& c) { return std::string(c.train.distill ? "true" : "false"); }},
      {"distill_temperature",
       [](C& c, V v) { c.train.distill_temperature = parse_double("distill_temperature", v); },
       [](const C& c) { return fmt_double(c.train.distill_temperature); }},
      {"clamp", [](C& c, V v) { c.train.clamp = parse_bool("clamp", v); },
       [](const C& c) { return std::string(c.train.clamp ? "true" : "false"); }},
      {"hidden", [](C& c, V v) { c.train.hidden = parse_size_list("hidden", v); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.train.hidden, ",")); }},
      {"seeds", [](C& c, V v) { c.seeds = parse_seeds(v); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.seeds, ",")); }},
      {"output_dir", [](C& c, V v) { c.output_dir = trim(v); },
       [](const C& c) { return c.output_dir.string(); }},
      {"threads", [](C& c, V v) { c.threads = parse_size("threads", v); },
       [](const C& c) { return std::to_string(c.threads); }},
      {"save_logs", [](C& c, V v) { c.save_logs = parse_bool("save_logs", v); },
       [](const C& c) { return std::string(c.save_logs ? "true" : "false"); }},
      {"save_memory", [](C& c, V v) { c.save_memory = parse_bool("save_memory", v); },
       [](const C& c) { return std::string(c.save_memory ? "true" : "false"); }},
      {"save_plots", [](C& c, V v) { c.save_plots = parse_bool("save_plots", v); },
       [](const C& c) { return std::string(c.save_plots ? "true" : "false"); }},
  };
  return table;
}

}  // namespace

const std::map<std::string, std::string>& config_aliases() {
  static const std::map<std::string, std::string> table = {
      {"ratio", "synthetic_ratio"},
      {"exemplars_per_class", "k"},
      {"cdd_steps", "cdd_steps_per_epoch"},
      {"out", "output_dir"},
  };
  return table;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure by index.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string run_name(Method method, std::uint64_t seed) {
  return fmt::format("{}_seed{}", to_string(method), seed);
}

void write_run_artifacts(const ExperimentConfig& config, const std::string& name,
                         const StreamRun& run) {
  if (config.save_logs) {
    fs::create_directories(config.output_dir / "logs");
    std::ofstream out(config.output_dir / "logs" / (name + ".jsonl"));
    if (!out) throw DataError("cannot write logs under " + config.output_dir.string());
    for (const auto& entry : run.log) out << to_json(entry).dump() << '\n';
  }
  if (config.save_memory) {
    save_memory(run.memory, config.output_dir / "memory" / name);
    fs::create_directories(config.output_dir / "models");
    save_network(config.output_dir / "models" / (name + ".hmnn"), run.model);
  }
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string join_aa(std::span<const double> aa) {
  std::string s;
  for (std::size_t i = 0; i < aa.size(); ++i) {
    if (i) s += ';';
    s += fmt::format("{:.6f}", aa[i]);
  }
  return s;
}

std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

void check_ratio(Method method, double forced, const ExperimentConfig& config) {
  if (config.synthetic_ratio && *config.synthetic_ratio != forced) {
    throw ConfigError(fmt::format("method {} requires synthetic ratio {}, got {}",
                                  to_string(method), forced, *config.synthetic_ratio));
  }
}

void check_selector(Method method, SelectorKind forced, const ExperimentConfig& config) {
  if (config.selector && *config.selector != forced) {
    throw ConfigError(fmt::format("method {} requires the {} selector, got {}",
                                  to_string(method), to_string(forced),
                                  to_string(*config.selector)));
  }
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "real-herding") return Method::kRealHerding;
  if (name == "real-random") return Method::kRealRandom;
  if (name == "synthetic-only") return Method::kSyntheticOnly;
  if (name == "hybrid-greedy") return Method::kHybridGreedy;
  if (name == "hybrid-random") return Method::kHybridRandom;
  throw ConfigError(fmt::format("unknown method '{}'", name));
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kRealHerding: return "real-herding";
    case Method::kRealRandom: return "real-random";
    case Method::kSyntheticOnly: return "synthetic-only";
    case Method::kHybridGreedy: return "hybrid-greedy";
    case Method::kHybridRandom: return "hybrid-random";
  }
  return "?";
}

void set_config_value(ExperimentConfig& config, std::string_view key,
                      std::string_view value) {
  std::string k = canonical_key(key);
  if (auto it = config_aliases().find(k); it != config_aliases().end()) k = it->second;
  for (const auto& f : fields()) {
    if (f.key == k) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected 'key = value'", line_no);
    }
    try {
      set_config_value(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  return parse_config(in);
}

void apply_env_overrides(ExperimentConfig& config) {
  if (const char* dir = std::getenv("HMCIL_OUTPUT_DIR"); dir && *dir) {
    config.output_dir = dir;
  }
  if (const char* threads = std::getenv("HMCIL_THREADS"); threads && *threads) {
    config.threads = parse_size("HMCIL_THREADS", threads);
  }
}

TrainConfig resolve_train_config(const ExperimentConfig& config) {
  TrainConfig train = config.train;
  switch (config.method) {
    case Method::kRealHerding:
      check_ratio(config.method, 0.0, config);
      check_selector(config.method, SelectorKind::kHerding, config);
      train.synthetic_ratio = 0.0;
      train.selector = SelectorKind::kHerding;
      break;
    case Method::kRealRandom:
      check_ratio(config.method, 0.0, config);
      check_selector(config.method, SelectorKind::kRandom, config);
      train.synthetic_ratio = 0.0;
      train.selector = SelectorKind::kRandom;
      break;
    case Method::kSyntheticOnly:
      check_ratio(config.method, 1.0, config);
      train.synthetic_ratio = 1.0;
      train.selector = config.selector.value_or(SelectorKind::kGreedy);
      break;
    case Method::kHybridGreedy:
      train.synthetic_ratio = config.synthetic_ratio.value_or(0.5);
      train.selector = config.selector.value_or(SelectorKind::kGreedy);
      break;
    case Method::kHybridRandom:
      check_selector(config.method, SelectorKind::kRandom, config);
      train.synthetic_ratio = config.synthetic_ratio.value_or(0.5);
      train.selector = SelectorKind::kRandom;
      break;
  }
  train.validate();
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  if (config.phases < 1) throw ConfigError("phases must be >= 1");
  return train;
}

std::string dump_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(config));
  return out;
}

TaskStream build_stream(const ExperimentConfig& config, std::uint64_t seed) {
  const std::uint64_t stream_seed = config.source.data_seed + seed;
  if (config.source.kind == "gaussian") {
    GaussianOptions opts = config.source.gaussian;
    opts.seed = stream_seed;
    return gen_gaussian_stream(opts, config.protocol, config.phases);
  }
  const DataFormat format =
      config.source.kind == "idx" ? DataFormat::kIdx : DataFormat::kCsv;
  const Dataset data = load_dataset(config.source.path, format, config.source.labels_path);
  return split_stream(data.samples, config.protocol, config.phases, stream_seed);
}

Metrics compute_metrics(std::span<const double> per_task_aa) {
  if (per_task_aa.empty()) throw DomainError("no per-task accuracies");
  double sum = 0.0;
  for (double a : per_task_aa) sum += a;
  return {sum / static_cast<double>(per_task_aa.size()), per_task_aa.back()};
}

void RunReport::validate() const {
  const Metrics m = compute_metrics(per_task_aa);
  if (std::abs(m.aia - aia) > 1e-12 || std::abs(m.laa - laa) > 1e-12) {
    throw StateError(fmt::format("run {} seed {}: AIA/LAA disagree with per-task AA",
                                 to_string(method), seed));
  }
}

RunReport run_single(const ExperimentConfig& config, std::uint64_t seed,
                     StreamRun* run_out, const TaskCallback& on_task) {
  TrainConfig train = resolve_train_config(config);
  train.seed = seed;
  const TaskStream stream = build_stream(config, seed);
  RunReport report;
  report.method = config.method;
  report.seed = seed;
  report.k = train.exemplars_per_class;
  report.synthetic_ratio = train.synthetic_ratio;
  const auto start = std::chrono::steady_clock::now();
  StreamRun run = run_stream(stream, train,
                             [&](std::size_t t, const TaskResult& r, double aa) {
                               report.synthetic_allocated += r.synthetic_init.total();
                               if (on_task) on_task(t, r, aa);
                             });
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.per_task_aa = run.per_task_aa;
  const Metrics m = compute_metrics(report.per_task_aa);
  report.aia = m.aia;
  report.laa = m.laa;
  report.validate();
  if (run_out) *run_out = std::move(run);
  return report;
}

void write_summary_csv(std::ostream& out, std::span<const RunReport> reports) {
  out << "schema_version,method,seed,k,synthetic_ratio,tasks,aia,laa,per_task_aa\n";
  for (const auto& r : reports) {
    out << fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{}\n", kCsvSchemaVersion,
                       to_string(r.method), r.seed, r.k, r.synthetic_ratio,
                       r.per_task_aa.size(), r.aia, r.laa, join_aa(r.per_task_aa));
  }
}

void write_aggregate_csv(std::ostream& out, std::span<const RunReport> reports) {
  out << "schema_version,method,k,synthetic_ratio,runs,aia_mean,aia_std,laa_mean,"
         "laa_std\n";
  std::map<std::tuple<std::string, std::size_t, double>, std::vector<const RunReport*>>
      groups;
  std::vector<std::tuple<std::string, std::size_t, double>> order;
  for (const auto& r : reports) {
    auto key = std::make_tuple(std::string(to_string(r.method)), r.k, r.synthetic_ratio);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  for (const auto& key : order) {
    std::vector<double> aia, laa;
    for (const auto* r : groups[key]) {
      aia.push_back(r->aia);
      laa.push_back(r->laa);
    }
    const auto [am, as] = mean_std(aia);
    const auto [lm, ls] = mean_std(laa);
    out << fmt::format("{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n",
                       kCsvSchemaVersion, std::get<0>(key), std::get<1>(key),
                       std::get<2>(key), aia.size(), am, as, lm, ls);
  }
}

std::vector<RunReport> run_experiment(const ExperimentConfig& config) {
  resolve_train_config(config);
  fs::create_directories(config.output_dir);
  open_output(config.output_dir / "config.txt") << dump_config(config);

  std::vector<RunReport> reports(config.seeds.size());
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t i) {
    StreamRun run;
    reports[i] = run_single(config, config.seeds[i], &run);
    write_run_artifacts(config, run_name(config.method, config.seeds[i]), run);
  });

  {
    auto out = open_output(config.output_dir / "summary.csv");
    write_summary_csv(out, reports);
  }
  {
    auto out = open_output(config.output_dir / "aggregate.csv");
    write_aggregate_csv(out, reports);
  }
  {
    auto out = open_output(config.output_dir / "timing.csv");
    out << "method,seed,wall_time_s\n";
    for (const auto& r : reports) {
      out << fmt::format("{},{},{:.3f}\n", to_string(r.method), r.seed, r.wall_time_s);
    }
  }
  if (config.save_plots) {
    std::vector<Series> series;
    for (const auto& r : reports) {
      Series s{fmt::format("seed {}", r.seed), {}, r.per_task_aa};
      for (std::size_t t = 1; t <= r.per_task_aa.size(); ++t) {
        s.x.push_back(static_cast<double>(t));
      }
      series.push_back(std::move(s));
    }
    write_line_chart(config.output_dir / "plots" / "aa_vs_task.svg",
                     {fmt::format("{}: AA after each task", to_string(config.method)),
                      "task", "AA (%)"},
                     series);
  }
  return reports;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "k" || name == "buffer-size" || name == "buffer_size") {
    return SweepAxis::kBufferSize;
  }
  if (name == "ratio" || name == "synthetic-ratio" || name == "synthetic_ratio") {
    return SweepAxis::kSyntheticRatio;
  }
  throw ConfigError(fmt::format("unknown sweep axis '{}'", name));
}

std::string_view to_string(SweepAxis axis) {
  return axis == SweepAxis::kBufferSize ? "k" : "synthetic_ratio";
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            std::vector<double> values, std::vector<Method> methods) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (methods.empty()) methods.push_back(config.method);

  struct Cell {
    double value;
    ExperimentConfig config;
  };
  std::vector<Cell> cells;
  for (double v : values) {
    for (Method method : methods) {
      ExperimentConfig c = config;
      c.method = method;
      if (axis == SweepAxis::kBufferSize) {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw ConfigError(fmt::format("buffer size {} is not a positive integer", v));
        }
        c.train.exemplars_per_class = static_cast<std::size_t>(v);
      } else {
        c.synthetic_ratio = v;
      }
      resolve_train_config(c);
      cells.push_back({v, std::move(c)});
    }
  }

  fs::create_directories(config.output_dir);
  open_output(config.output_dir / "config.txt") << dump_config(config);

  const std::size_t per_cell = config.seeds.size();
  std::vector<SweepRow> rows(cells.size() * per_cell);
  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    const Cell& cell = cells[i / per_cell];
    const std::uint64_t seed = config.seeds[i % per_cell];
    StreamRun run;
    rows[i] = {cell.value, run_single(cell.config, seed, &run)};
    write_run_artifacts(
        cell.config,
        fmt::format("{}-{}_{}", to_string(axis), cell.value,
                    run_name(cell.config.method, seed)),
        run);
  });

  {
    auto out = open_output(config.output_dir / "sweep.csv");
    write_sweep_csv(out, axis, rows);
  }
  {
    std::vector<RunReport> reports;
    for (const auto& r : rows) reports.push_back(r.report);
    auto out = open_output(config.output_dir / "sweep_aggregate.csv");
    write_aggregate_csv(out, reports);
  }
  if (config.save_plots) {
    std::vector<Series> series;
    for (Method method : methods) {
      Series s{std::string(to_string(method)), {}, {}};
      for (double v : values) {
        std::vector<double> aia;
        for (const auto& r : rows) {
          if (r.value == v && r.report.method == method) aia.push_back(r.report.aia);
        }
        s.x.push_back(v);
        s.y.push_back(mean_std(aia).first);
      }
      series.push_back(std::move(s));
    }
    write_line_chart(config.output_dir / "plots" / "sweep_aia.svg",
                     {"mean AIA over seeds", std::string(to_string(axis)), "AIA (%)"},
                     series);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis,
                     std::span<const SweepRow> rows) {
  out << "schema_version,axis,value,method,seed,k,synthetic_ratio,aia,laa,"
         "per_task_aa\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << fmt::format("{},{},{},{},{},{},{},{:.6f},{:.6f},{}\n", kCsvSchemaVersion,
                       to_string(axis), row.value, to_string(r.method), r.seed, r.k,
                       r.synthetic_ratio, r.aia, r.laa, join_aa(r.per_task_aa));
  }
}

}  // namespace hmcil
