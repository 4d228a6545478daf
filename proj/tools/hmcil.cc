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

// hmcil: command line front end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "hmcil/cdd.h"
#include "hmcil/data.h"
#include "hmcil/errors.h"
#include "hmcil/experiment.h"
#include "hmcil/io.h"
#include "hmcil/memory.h"
#include "hmcil/selector.h"
#include "hmcil/theory.h"
#include "hmcil/trainer.h"

namespace {

using namespace hmcil;
namespace fs = std::filesystem;

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

// Config file, then flags, then environment.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "key = value experiment config")
        ->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override a config key: key=value");
    std::map<std::string, std::string> names;
    for (const auto& key : config_keys()) names[key] = "--" + dashed(key);
    for (const auto& [alias, key] : config_aliases()) {
      names[key] += ",--" + dashed(alias);
    }
    for (const auto& key : config_keys()) {
      app->add_option(names[key], values[key], "Config key " + key);
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig config =
        config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    for (const auto& [key, value] : values) {
      if (!value.empty()) set_config_value(config, key, value);
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value: " + kv);
      set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    apply_env_overrides(config);
    resolve_train_config(config);
    return config;
  }
};

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("not a number: " + item);
    out.push_back(v);
  }
  return out;
}

void print_reports(const std::vector<RunReport>& reports) {
  std::ostringstream agg;
  write_aggregate_csv(agg, reports);
  for (const auto& r : reports) {
    fmt::print("{:<15} seed {:<4} AIA {:6.2f}  LAA {:6.2f}  ({:.1f}s)\n",
               to_string(r.method), r.seed, r.aia, r.laa, r.wall_time_s);
  }
  fmt::print("\n{}", agg.str());
}

int cmd_gen_data(const std::string& out, const std::string& format,
                 const GaussianOptions& opts) {
  const auto samples = gen_gaussian_samples(opts);
  if (parse_data_format(format) == DataFormat::kIdx) {
    write_idx(out, default_idx_labels_path(out), samples);
  } else {
    write_csv(out, samples);
  }
  fmt::print("wrote {} samples ({} classes, dim {}) to {}\n", samples.size(),
             opts.classes, opts.dim, out);
  return 0;
}

int cmd_distill(const std::string& data, const std::string& format,
                const std::vector<std::string>& checkpoints,
                const std::string& init, std::size_t m, std::size_t steps,
                const CddSettings& settings, std::uint64_t seed,
                const std::string& out, const std::string& csv) {
  const Dataset ds = load_dataset(data, parse_data_format(format));
  std::vector<Network> nets;
  for (const auto& path : checkpoints) nets.push_back(load_network(path));
  SyntheticSet start;
  if (!init.empty()) {
    start = load_synthetic(init);
  } else {
    std::vector<int> classes;
    for (const auto& [c, rows] : group_by_class(ds.samples)) classes.push_back(c);
    std::mt19937_64 rng(seed);
    start = init_synthetic(ds.samples, classes, m, rng);
  }
  const SyntheticSet result = distill_full(start, ds.samples, nets, steps, settings);
  save_synthetic(out, result);
  if (!csv.empty()) save_synthetic_csv(csv, result);
  const double before =
      settings.objective == Objective::kDm ? dm_loss(start, ds.samples, nets)
                                           : dsa_loss(start, ds.samples, nets).value;
  const double after =
      settings.objective == Objective::kDm ? dm_loss(result, ds.samples, nets)
                                           : dsa_loss(result, ds.samples, nets).value;
  fmt::print("{} objective: {:.6g} -> {:.6g} after {} steps; wrote {}\n",
             to_string(settings.objective), before, after, steps, out);
  return 0;
}

int cmd_select(const std::string& data, const std::string& format,
               const std::string& model_path, const std::string& synthetic_path,
               std::size_t k_real, SelectorKind kind, Objective objective,
               std::uint64_t seed, const std::string& out) {
  const Dataset ds = load_dataset(data, parse_data_format(format));
  const Network model = load_network(model_path);
  const SyntheticSet synthetic =
      synthetic_path.empty() ? SyntheticSet{} : load_synthetic(synthetic_path);
  SelectionResult result;
  switch (kind) {
    case SelectorKind::kGreedy:
      result = greedy_select(ds.samples, synthetic, model, k_real, objective);
      break;
    case SelectorKind::kHerding:
      result = herding_select(ds.samples, model, k_real);
      break;
    case SelectorKind::kRandom:
      result = random_select(ds.samples, k_real, seed, &model);
      break;
  }
  const std::string text = to_json(result).dump(2);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream(out) << text << '\n';
    fmt::print("selected {} samples; final objective {:.6g}; wrote {}\n",
               result.indices.size(),
               result.trace.empty() ? 0.0 : result.trace.back(), out);
  }
  return 0;
}

int cmd_eval(const ExperimentConfig& config, const std::string& model_path,
             std::uint64_t seed, std::size_t task) {
  const Network model = load_network(model_path);
  const TaskStream stream = build_stream(config, seed);
  const std::size_t upto = task == 0 ? stream.tasks.size() : task;
  for (std::size_t t = 1; t <= upto; ++t) {
    if (model.output_dim() < stream.classes_upto(t)) break;
    fmt::print("task {}: AA {:.2f}%\n", t, evaluate(model, stream, t));
  }
  return 0;
}

int cmd_epsilon(const std::string& rhos, const std::string& eps0s,
                std::size_t steps, const std::string& out) {
  const auto r = parse_doubles(rhos);
  const auto e = parse_doubles(eps0s);
  if (out.empty()) {
    write_epsilon_csv(std::cout, r, e, steps);
  } else {
    std::ofstream file(out);
    write_epsilon_csv(file, r, e, steps);
  }
  for (double rho : r) {
    if (const auto fp = fixed_points(rho)) {
      fmt::print(stderr, "rho {}: fixed points {:.12g}, {:.12g}\n", rho, fp->first,
                 fp->second);
    } else {
      fmt::print(stderr, "rho {}: no real fixed point (rho > 1/4)\n", rho);
    }
  }
  return 0;
}

int cmd_export_memory(const std::string& dir, const std::string& out) {
  const HybridMemory memory = load_memory(dir);
  fs::create_directories(out);
  std::size_t rows = 0;
  for (const auto& task : memory.tasks()) {
    std::ofstream csv(fs::path(out) / fmt::format("task_{}.csv", task.task));
    const std::size_t dim =
        task.synthetic.dim() > 0 ? task.synthetic.dim()
                                 : (task.real.empty() ? 0 : task.real.front().x.size());
    csv << "task,class,kind";
    for (std::size_t d = 0; d < dim; ++d) csv << ",x" << d + 1;
    csv << '\n';
    auto emit = [&](int label, const char* kind, std::span<const double> x) {
      csv << task.task << ',' << label << ',' << kind;
      for (double v : x) csv << fmt::format(",{:.17g}", v);
      csv << '\n';
      ++rows;
    };
    for (const auto& [c, m] : task.synthetic.per_class) {
      for (std::size_t r = 0; r < m.rows(); ++r) emit(c, "synthetic", m.row(r));
    }
    for (const auto& s : task.real) emit(s.label, "real", s.x);
  }
  fmt::print("exported {} exemplars from {} tasks (k = {}, ratio = {}) to {}\n", rows,
             memory.tasks().size(), memory.k(), memory.synthetic_ratio(), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-incremental learning with hybrid (synthetic + real) memory"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a Gaussian-blob dataset");
  GaussianOptions gopts;
  std::string gen_out, gen_format = "csv";
  gen->add_option("-o,--out", gen_out, "Output file")->required();
  gen->add_option("--format", gen_format, "csv or idx")
      ->check(CLI::IsMember({"csv", "idx"}));
  gen->add_option("--classes", gopts.classes, "Number of classes");
  gen->add_option("--per-class", gopts.per_class, "Samples per class");
  gen->add_option("--dim", gopts.dim, "Feature dimension");
  gen->add_option("--spread", gopts.spread, "Within-class standard deviation");
  gen->add_option("--mean-scale", gopts.mean_scale, "Scale of class means");
  gen->add_option("--seed", gopts.seed, "Random seed");

  // run
  auto* run = app.add_subcommand("run", "Run one method over all seeds");
  ConfigFlags run_flags;
  run_flags.attach(run);
  bool dry_run = false;
  run->add_flag("--print-config", dry_run, "Print the resolved config and exit");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Sweep buffer size or synthetic ratio");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sw);
  std::string axis, values_text;
  std::vector<std::string> methods;
  sw->add_option("--axis", axis, "k or ratio")->required();
  sw->add_option("--values", values_text, "Comma-separated axis values")->required();
  sw->add_option("--methods", methods, "Methods to compare (default: method key)")
      ->delimiter(',');

  // distill
  auto* dist = app.add_subcommand("distill", "Standalone CDD on saved checkpoints");
  std::string d_data, d_format = "csv", d_init, d_out, d_csv, d_objective = "dm";
  std::vector<std::string> d_ckpts;
  std::size_t d_m = 10, d_steps = 100;
  CddSettings d_settings;
  std::uint64_t d_seed = 0;
  dist->add_option("--data", d_data, "Real samples")->required()->check(CLI::ExistingFile);
  dist->add_option("--format", d_format, "csv or idx");
  dist->add_option("--checkpoints", d_ckpts, "Saved networks (.hmnn)")
      ->required()
      ->delimiter(',');
  dist->add_option("--init", d_init, "Initial synthetic set (default: random reals)");
  dist->add_option("-m,--per-class", d_m, "Synthetic exemplars per class");
  dist->add_option("--steps", d_steps, "Descent steps");
  dist->add_option("--lr", d_settings.lr, "Step size");
  dist->add_option("--momentum", d_settings.momentum, "Momentum");
  dist->add_option("--objective", d_objective, "dm or dsa");
  dist->add_flag("--clamp", d_settings.clamp, "Clamp exemplars to [0, 1]");
  dist->add_option("--seed", d_seed, "Seed for the random initialization");
  dist->add_option("-o,--out", d_out, "Output synthetic set (.hmsy)")->required();
  dist->add_option("--csv", d_csv, "Also write the synthetic set as CSV");

  // select
  auto* sel = app.add_subcommand("select", "Standalone real-exemplar selection");
  std::string s_data, s_format = "csv", s_model, s_syn, s_out, s_kind = "greedy",
                      s_objective = "dm";
  std::size_t s_k = 10;
  std::uint64_t s_seed = 0;
  sel->add_option("--data", s_data, "Real samples")->required()->check(CLI::ExistingFile);
  sel->add_option("--format", s_format, "csv or idx");
  sel->add_option("--model", s_model, "Network (.hmnn)")->required();
  sel->add_option("--synthetic", s_syn, "Synthetic set to condition on (.hmsy)");
  sel->add_option("-k,--k-real", s_k, "Real exemplars per class");
  sel->add_option("--selector", s_kind, "greedy, herding or random");
  sel->add_option("--objective", s_objective, "dm or dsa");
  sel->add_option("--seed", s_seed, "Seed for random selection");
  sel->add_option("-o,--out", s_out, "Selection JSON (default: stdout)");

  // eval
  auto* ev = app.add_subcommand("eval", "AA of a saved model on a config's stream");
  ConfigFlags eval_flags;
  eval_flags.attach(ev);
  std::string e_model;
  std::uint64_t e_seed = 0;
  std::size_t e_task = 0;
  ev->add_option("--model", e_model, "Network (.hmnn)")->required();
  ev->add_option("--stream-seed", e_seed, "Run seed the stream was built with");
  ev->add_option("--task", e_task, "Evaluate up to this task (default: all)");

  // epsilon
  auto* eps = app.add_subcommand("epsilon", "Iterate eps <- rho / (1 - eps)");
  std::string rhos = "0.1,0.2,0.25,0.3", eps0s = "0,0.3,0.6";
  std::size_t eps_steps = 200;
  std::string eps_out;
  eps->add_option("--rho", rhos, "Comma-separated rho values");
  eps->add_option("--eps0", eps0s, "Comma-separated starting values");
  eps->add_option("--steps", eps_steps, "Iterations");
  eps->add_option("-o,--out", eps_out, "CSV output (default: stdout)");

  // export-memory
  auto* ex = app.add_subcommand("export-memory", "Dump a saved memory as CSV");
  std::string x_dir, x_out;
  ex->add_option("--memory", x_dir, "Memory directory")->required();
  ex->add_option("-o,--out", x_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_out, gen_format, gopts);
    if (run->parsed()) {
      const ExperimentConfig config = run_flags.resolve();
      if (dry_run) {
        std::cout << dump_config(config);
        return 0;
      }
      print_reports(run_experiment(config));
      fmt::print("results in {}\n", config.output_dir.string());
      return 0;
    }
    if (sw->parsed()) {
      const ExperimentConfig config = sweep_flags.resolve();
      std::vector<Method> ms;
      for (const auto& m : methods) ms.push_back(parse_method(m));
      const auto rows =
          sweep(config, parse_sweep_axis(axis), parse_doubles(values_text), ms);
      std::ostringstream csv;
      write_sweep_csv(csv, parse_sweep_axis(axis), rows);
      std::cout << csv.str();
      fmt::print("results in {}\n", config.output_dir.string());
      return 0;
    }
    if (dist->parsed()) {
      d_settings.objective = parse_objective(d_objective);
      return cmd_distill(d_data, d_format, d_ckpts, d_init, d_m, d_steps, d_settings,
                         d_seed, d_out, d_csv);
    }
    if (sel->parsed()) {
      return cmd_select(s_data, s_format, s_model, s_syn, s_k, parse_selector(s_kind),
                        parse_objective(s_objective), s_seed, s_out);
    }
    if (ev->parsed()) {
      return cmd_eval(eval_flags.resolve(), e_model, e_seed, e_task);
    }
    if (eps->parsed()) return cmd_epsilon(rhos, eps0s, eps_steps, eps_out);
    if (ex->parsed()) return cmd_export_memory(x_dir, x_out);
  } catch (const hmcil::ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return 2;
  } catch (const hmcil::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const hmcil::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
