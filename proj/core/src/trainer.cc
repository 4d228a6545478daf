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

#include "hmcil/trainer.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hmcil/checkpoint_window.h"
#include "hmcil/errors.h"

namespace hmcil {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Matrix gather_rows(const Matrix& all, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), all.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(all.row(idx[i]).begin(), all.cols(), out.row(i).begin());
  }
  return out;
}

double objective_value(Objective objective, const SyntheticSet& synthetic,
                       std::span<const Sample> real,
                       std::span<const Network> checkpoints) {
  if (objective == Objective::kDm) return dm_loss(synthetic, real, checkpoints);
  if (objective == Objective::kDsa) {
    return dsa_loss(synthetic, real, checkpoints).value;
  }
  throw ConfigError(fmt::format("objective '{}' is not implemented",
                                to_string(objective)));
}

}  // namespace

ScheduleKind parse_schedule(std::string_view name) {
  if (name == "piecewise" || name == "step") return ScheduleKind::kPiecewise;
  if (name == "cosine") return ScheduleKind::kCosine;
  throw ConfigError(fmt::format("unknown lr schedule '{}'", name));
}

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kCosine ? "cosine" : "piecewise";
}

double LrSchedule::lr_at(double base, std::size_t epoch,
                         std::size_t total) const {
  if (kind == ScheduleKind::kCosine) {
    const double frac = total > 0 ? static_cast<double>(epoch - 1) /
                                        static_cast<double>(total)
                                  : 0.0;
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
  }
  double lr = base;
  for (std::size_t m : milestones) {
    if (epoch > m) lr *= gamma;
  }
  return lr;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (window > epochs) {
    throw ConfigError(fmt::format("window {} exceeds epochs {}", window, epochs));
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (!(cdd_lr > 0.0)) throw ConfigError("cdd lr must be > 0");
  if (!(cdd_momentum >= 0.0 && cdd_momentum < 1.0)) {
    throw ConfigError("cdd momentum must lie in [0, 1)");
  }
  if (exemplars_per_class < 1) throw ConfigError("k must be >= 1");
  if (!(synthetic_ratio >= 0.0 && synthetic_ratio <= 1.0)) {
    throw ConfigError("synthetic ratio must lie in [0, 1]");
  }
  if (!is_implemented(objective)) {
    throw ConfigError(fmt::format("objective '{}' is not implemented",
                                  to_string(objective)));
  }
  if (!(schedule.gamma > 0.0)) throw ConfigError("lr decay must be > 0");
  if (distill && !(distill_temperature > 0.0)) {
    throw ConfigError("distillation temperature must be > 0");
  }
  for (std::size_t h : hidden) {
    if (h < 1) throw ConfigError("hidden widths must be >= 1");
  }
}

nlohmann::json to_json(const EpochLog& log) {
  nlohmann::json j = {{"task", log.task},
                      {"epoch", log.epoch},
                      {"train-loss", log.train_loss},
                      {"window-size", log.window_size}};
  j["cdd-loss"] = log.cdd_loss ? nlohmann::json(*log.cdd_loss) : nlohmann::json();
  return j;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t task) {
  const std::uint64_t tag = fnv1a(purpose);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(task),
                    static_cast<std::uint32_t>(task >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TaskResult train_task(Network model, const TaskStream& stream, std::size_t t,
                      HybridMemory memory, const TrainConfig& config) {
  config.validate();
  if (t < 1 || t > stream.tasks.size()) {
    throw RangeError(fmt::format("task {} outside 1..{}", t, stream.tasks.size()));
  }
  if (memory.k() != config.exemplars_per_class ||
      memory.synthetic_ratio() != config.synthetic_ratio) {
    throw ConfigError("memory budget does not match the training config");
  }
  const TaskSpec& task = stream.tasks[t - 1];
  const std::size_t seen_before = t > 1 ? stream.classes_upto(t - 1) : 0;
  {
    std::vector<int> allowed;
    for (std::size_t i = 0; i + 1 < t; ++i) {
      const auto& c = stream.tasks[i].classes;
      allowed.insert(allowed.end(), c.begin(), c.end());
    }
    std::sort(allowed.begin(), allowed.end());
    for (int c : memory.stored_classes()) {
      if (!std::binary_search(allowed.begin(), allowed.end(), c)) {
        throw StateError(fmt::format(
            "memory holds class {} which is not from tasks before {}", c, t));
      }
    }
  }
  if (t > 1 && config.replay && memory.empty()) {
    throw StateError(fmt::format("replay is on but memory is empty at task {}", t));
  }
  if (model.input_dim() != stream.feature_dim) {
    throw ShapeError("model input width does not match the stream");
  }

  const Network teacher = model;
  const std::size_t needed = stream.classes_upto(t);
  if (model.output_dim() < needed) {
    std::mt19937_64 head_rng(derive_seed(config.seed, "head", t));
    grow_head(model, needed - model.output_dim(), head_rng);
  }

  LossSpec loss;
  if (config.distill && t > 1) {
    loss.kind = LossKind::kCrossEntropyDistill;
    loss.teacher = &teacher;
    loss.old_classes = seen_before;
    loss.temperature = config.distill_temperature;
  }

  const std::size_t m =
      HybridMemory::synthetic_share(config.exemplars_per_class, config.synthetic_ratio);
  const std::size_t k_real = config.exemplars_per_class - m;

  TaskResult result{std::move(model), std::move(memory), {}, {}, {}};
  Network& net = result.model;

  SyntheticSet synthetic;
  if (m > 0) {
    std::mt19937_64 syn_rng(derive_seed(config.seed, "synthetic-init", t));
    synthetic = init_synthetic(task.train, task.classes, m, syn_rng);
  }
  result.synthetic_init = synthetic;
  const ClassSamples real_by_class = group_by_class(task.train);

  std::vector<Sample> train = task.train;
  if (config.replay) {
    auto replay = result.memory.exemplars();
    train.insert(train.end(), replay.begin(), replay.end());
  }
  const Matrix x_all = to_matrix(train);
  const std::vector<int> y_all = labels_of(train);

  std::mt19937_64 order_rng(derive_seed(config.seed, "shuffle", t));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  CheckpointWindow window(config.window);
  SgdOptimizer optimizer;
  const CddSettings cdd{config.cdd_lr, config.cdd_momentum, config.objective,
                        config.clamp, LossKind::kCrossEntropy};

  for (std::size_t j = 1; j <= config.epochs; ++j) {
    const SgdOptions sgd{config.schedule.lr_at(config.lr, j, config.epochs),
                         config.momentum, config.weight_decay};
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix xb = gather_rows(x_all, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y_all[idx[i]];
      const ParamGradient g = grad_params(net, xb, yb, loss);
      optimizer.step(net, g.grad, sgd);
      loss_sum += g.loss * static_cast<double>(idx.size());
    }

    window.push(static_cast<int>(j), net);
    EpochLog log{static_cast<int>(t), static_cast<int>(j),
                 loss_sum / static_cast<double>(order.size()), window.size(),
                 std::nullopt};
    if (j > config.window && m > 0 && config.cdd_steps_per_epoch > 0) {
      for (std::size_t s = 0; s < config.cdd_steps_per_epoch; ++s) {
        cdd_step(synthetic, real_by_class, window, cdd);
      }
      log.cdd_loss = objective_value(config.objective, synthetic, task.train,
                                     window.checkpoints());
    }
    result.log.push_back(log);
  }

  TaskMemory entry;
  entry.task = task.id;
  entry.classes = task.classes;
  if (k_real > 0) {
    switch (config.selector) {
      case SelectorKind::kGreedy:
        result.selection = greedy_select(task.train, synthetic, net, k_real,
                                         config.objective);
        break;
      case SelectorKind::kHerding:
        result.selection = herding_select(task.train, net, k_real);
        break;
      case SelectorKind::kRandom:
        result.selection = random_select(
            task.train, k_real, derive_seed(config.seed, "random-select", t));
        break;
    }
    for (std::size_t i : result.selection.indices) {
      entry.real.push_back(task.train[i]);
      entry.real_indices.push_back(i);
    }
  }
  if (m > 0) synthetic.validate(config.clamp);
  entry.synthetic = std::move(synthetic);
  result.memory.append(std::move(entry));
  return result;
}

double accuracy_percent(const Matrix& logits, std::span<const int> labels,
                        std::size_t num_classes) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("logit rows and label count differ");
  }
  if (num_classes < 1 || num_classes > logits.cols()) {
    throw ShapeError(fmt::format("cannot score {} classes with {} logits",
                                 num_classes, logits.cols()));
  }
  if (labels.empty()) throw DataError("no test points to score");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r).first(num_classes);
    const auto best = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[r]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate(const Network& model, const TaskStream& stream, std::size_t t) {
  if (t < 1 || t > stream.tasks.size()) {
    throw RangeError(fmt::format("task {} outside 1..{}", t, stream.tasks.size()));
  }
  const std::size_t seen = stream.classes_upto(t);
  if (model.output_dim() < seen) {
    throw ShapeError(fmt::format("model head has {} outputs, {} classes seen",
                                 model.output_dim(), seen));
  }
  std::vector<Sample> test;
  for (std::size_t i = 0; i < t; ++i) {
    const auto& ts = stream.tasks[i].test;
    test.insert(test.end(), ts.begin(), ts.end());
  }
  const Matrix logits = forward(model, test).logits;
  return accuracy_percent(logits, labels_of(test), seen);
}

StreamRun run_stream(const TaskStream& stream, const TrainConfig& config,
                     const TaskCallback& on_task) {
  config.validate();
  stream.validate();
  StreamRun run{{},
                make_mlp(stream.feature_dim, config.hidden, stream.classes_upto(1),
                         derive_seed(config.seed, "init", 0)),
                HybridMemory(config.exemplars_per_class, config.synthetic_ratio),
                {}};
  for (std::size_t t = 1; t <= stream.tasks.size(); ++t) {
    TaskResult r = train_task(std::move(run.model), stream, t,
                              std::move(run.memory), config);
    r.memory.check_budget();
    const std::size_t expected = stream.classes_upto(t) * config.exemplars_per_class;
    if (r.memory.size() != expected) {
      throw StateError(fmt::format("after task {} memory holds {} exemplars, expected {}",
                                   t, r.memory.size(), expected));
    }
    const double aa = evaluate(r.model, stream, t);
    run.per_task_aa.push_back(aa);
    run.log.insert(run.log.end(), r.log.begin(), r.log.end());
    if (on_task) on_task(t, r, aa);
    run.model = std::move(r.model);
    run.memory = std::move(r.memory);
  }
  return run;
}

}  // namespace hmcil
