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

#include "hmcil/cdd.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "hmcil/errors.h"

namespace hmcil {
namespace {

void check_inputs(const SyntheticSet& synthetic, const ClassSamples& real,
                  std::span<const Network> checkpoints) {
  if (checkpoints.empty()) throw StateError("no checkpoints to distill from");
  for (const auto& [c, rows] : synthetic.per_class) {
    auto it = real.find(c);
    if (it == real.end() || it->second.rows() == 0) {
      throw DataError(fmt::format("class {} has synthetic exemplars but no real data", c));
    }
    if (rows.cols() != it->second.cols()) {
      throw ShapeError("synthetic and real feature widths differ");
    }
  }
}

std::vector<int> constant_labels(int c, std::size_t n) {
  return std::vector<int>(n, c);
}

// Value and gradient of the dm term for one (class, checkpoint).
double dm_term(const Network& net, const Matrix& syn, const Matrix& real,
               double weight, Matrix* grad) {
  const std::vector<double> real_mean = column_mean(embed(net, real));
  double value = 0.0;
  auto objective = [&](const Matrix& emb, Matrix& g) {
    const std::vector<double> mean = column_mean(emb);
    value = squared_distance(mean, real_mean);
    const double scale = 2.0 * weight / static_cast<double>(emb.rows());
    for (std::size_t r = 0; r < emb.rows(); ++r) {
      auto gr = g.row(r);
      for (std::size_t e = 0; e < gr.size(); ++e) {
        gr[e] = scale * (mean[e] - real_mean[e]);
      }
    }
    return value;
  };
  if (grad) {
    InputGradient ig = grad_inputs(net, syn, objective);
    auto dst = grad->values();
    auto src = ig.grad.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  } else {
    Matrix emb = embed(net, syn);
    Matrix scratch(emb.rows(), emb.cols());
    objective(emb, scratch);
  }
  return value;
}

// Value and gradient of the dsa term for one (class, checkpoint).
double dsa_term(const Network& net, const Matrix& syn, const Matrix& real,
                int label, LossKind loss, double weight, Matrix* grad,
                bool& degenerate) {
  if (loss != LossKind::kCrossEntropy) {
    throw ConfigError("dsa supports only the cross-entropy loss");
  }
  const auto syn_labels = constant_labels(label, syn.rows());
  const auto real_labels = constant_labels(label, real.rows());
  const Network gs = grad_params(net, syn, syn_labels).grad;
  const Network gr = grad_params(net, real, real_labels).grad;
  const std::size_t depth = net.num_layers();
  const double inv_depth = 1.0 / static_cast<double>(depth);
  Network cotangent = net.zeros_like();
  double value = 0.0;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto s = gs.layer_values(l);
    const auto r = gr.layer_values(l);
    const double ns = std::sqrt(dot(s, s));
    const double nr = std::sqrt(dot(r, r));
    if (ns == 0.0 || nr == 0.0) {
      degenerate = true;
      value += kDsaWorst * inv_depth;
      continue;
    }
    const double cosine = dot(s, r) / (ns * nr);
    value -= cosine * inv_depth;
    if (!grad) continue;
    // d(-cos/depth)/ds = -(r/(|s||r|) - cos s/|s|^2)/depth
    auto& cl = cotangent.mutable_layers()[l];
    auto w = cl.weight.values();
    const std::size_t nw = w.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d =
          -weight * inv_depth * (r[i] / (ns * nr) - cosine * s[i] / (ns * ns));
      if (i < nw) {
        w[i] = d;
      } else {
        cl.bias[i - nw] = d;
      }
    }
  }
  if (grad) {
    Matrix g = grad_inputs_of_param_grad(net, syn, syn_labels, cotangent);
    auto dst = grad->values();
    auto src = g.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return value;
}

ObjectiveGradient evaluate(Objective objective, const SyntheticSet& synthetic,
                           const ClassSamples& real,
                           std::span<const Network> checkpoints, LossKind loss,
                           bool with_grad) {
  if (!is_implemented(objective)) {
    throw ConfigError(fmt::format("objective '{}' is not implemented",
                                  to_string(objective)));
  }
  check_inputs(synthetic, real, checkpoints);
  ObjectiveGradient out;
  const std::size_t classes = synthetic.per_class.size();
  if (classes == 0) return out;
  const double weight =
      1.0 / static_cast<double>(classes * checkpoints.size());
  for (const auto& [c, rows] : synthetic.per_class) {
    Matrix* g = nullptr;
    if (with_grad) {
      g = &out.grad.emplace(c, Matrix(rows.rows(), rows.cols())).first->second;
    }
    if (rows.rows() == 0) continue;
    const Matrix& r = real.at(c);
    for (const Network& net : checkpoints) {
      const double term =
          objective == Objective::kDm
              ? dm_term(net, rows, r, weight, g)
              : dsa_term(net, rows, r, c, loss, weight, g, out.degenerate);
      out.value += weight * term;
    }
  }
  return out;
}

double descend(SyntheticSet& synthetic, const ClassSamples& real,
               std::span<const Network> checkpoints,
               const CddSettings& settings) {
  ObjectiveGradient og = evaluate(settings.objective, synthetic, real,
                                  checkpoints, settings.loss, true);
  for (auto& [c, rows] : synthetic.per_class) {
    auto g = og.grad.at(c).values();
    auto x = rows.values();
    if (settings.momentum != 0.0) {
      Matrix& v = synthetic.velocity[c];
      if (v.rows() != rows.rows() || v.cols() != rows.cols()) {
        v = Matrix(rows.rows(), rows.cols());
      }
      auto vv = v.values();
      for (std::size_t i = 0; i < x.size(); ++i) {
        vv[i] = settings.momentum * vv[i] + g[i];
        x[i] -= settings.lr * vv[i];
      }
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= settings.lr * g[i];
    }
    if (settings.clamp) {
      for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    }
  }
  ++synthetic.step_count;
  return og.value;
}

}  // namespace

Objective parse_objective(std::string_view name) {
  if (name == "dm") return Objective::kDm;
  if (name == "dsa") return Objective::kDsa;
  if (name == "ftd") return Objective::kFtd;
  if (name == "datadam") return Objective::kDataDam;
  throw ConfigError("unknown objective '" + std::string(name) + "'");
}

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::kDm: return "dm";
    case Objective::kDsa: return "dsa";
    case Objective::kFtd: return "ftd";
    case Objective::kDataDam: return "datadam";
  }
  return "?";
}

bool is_implemented(Objective objective) {
  return objective == Objective::kDm || objective == Objective::kDsa;
}

ClassSamples group_by_class(std::span<const Sample> samples) {
  ClassSamples out;
  for (const auto& s : samples) out[s.label].append_row(s.x);
  return out;
}

std::vector<int> SyntheticSet::classes() const {
  std::vector<int> out;
  for (const auto& [c, _] : per_class) out.push_back(c);
  return out;
}

std::size_t SyntheticSet::per_class_count() const {
  if (per_class.empty()) return 0;
  const std::size_t m = per_class.begin()->second.rows();
  for (const auto& [c, rows] : per_class) {
    if (rows.rows() != m) {
      throw StateError(fmt::format("class {} holds {} exemplars, expected {}",
                                   c, rows.rows(), m));
    }
  }
  return m;
}

std::size_t SyntheticSet::dim() const {
  for (const auto& [_, rows] : per_class) {
    if (rows.rows() > 0) return rows.cols();
  }
  return 0;
}

std::size_t SyntheticSet::total() const {
  std::size_t n = 0;
  for (const auto& [_, rows] : per_class) n += rows.rows();
  return n;
}

std::vector<Sample> SyntheticSet::to_samples() const {
  std::vector<Sample> out;
  out.reserve(total());
  for (const auto& [c, rows] : per_class) {
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      auto row = rows.row(r);
      out.push_back({{row.begin(), row.end()}, c, true});
    }
  }
  return out;
}

void SyntheticSet::validate(bool clamped) const {
  per_class_count();
  for (const auto& [c, rows] : per_class) {
    for (double v : rows.values()) {
      if (!std::isfinite(v)) {
        throw StateError(fmt::format("non-finite synthetic value in class {}", c));
      }
      if (clamped && (v < 0.0 || v > 1.0)) {
        throw StateError(fmt::format("synthetic value out of [0,1] in class {}", c));
      }
    }
  }
}

SyntheticSet init_synthetic(std::span<const Sample> real,
                            std::span<const int> classes, std::size_t m,
                            std::mt19937_64& rng) {
  SyntheticSet out;
  if (m == 0) return out;
  ClassSamples grouped = group_by_class(real);
  for (int c : classes) {
    auto it = grouped.find(c);
    if (it == grouped.end() || it->second.rows() < m) {
      throw DataError(fmt::format("class {} has fewer than {} real samples", c, m));
    }
    std::vector<std::size_t> idx(it->second.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Matrix rows;
    for (std::size_t i = 0; i < m; ++i) rows.append_row(it->second.row(idx[i]));
    out.per_class.emplace(c, std::move(rows));
  }
  return out;
}

double dm_loss(const SyntheticSet& synthetic, std::span<const Sample> real,
               std::span<const Network> checkpoints) {
  return evaluate(Objective::kDm, synthetic, group_by_class(real), checkpoints,
                  LossKind::kCrossEntropy, false)
      .value;
}

DsaValue dsa_loss(const SyntheticSet& synthetic, std::span<const Sample> real,
                  std::span<const Network> checkpoints, LossKind loss) {
  ObjectiveGradient og = evaluate(Objective::kDsa, synthetic,
                                  group_by_class(real), checkpoints, loss, false);
  return {og.value, og.degenerate};
}

ObjectiveGradient objective_gradient(Objective objective,
                                     const SyntheticSet& synthetic,
                                     const ClassSamples& real,
                                     std::span<const Network> checkpoints,
                                     LossKind loss) {
  return evaluate(objective, synthetic, real, checkpoints, loss, true);
}

DsaValue gradient_match(const Network& a, const Network& b) {
  if (a.arch() != b.arch()) throw ShapeError("gradients have different shapes");
  DsaValue out;
  const std::size_t depth = a.num_layers();
  if (depth == 0) return out;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto s = a.layer_values(l);
    const auto r = b.layer_values(l);
    const double ns = std::sqrt(dot(s, s));
    const double nr = std::sqrt(dot(r, r));
    if (ns == 0.0 || nr == 0.0) {
      out.degenerate = true;
      out.value += kDsaWorst;
    } else {
      out.value -= dot(s, r) / (ns * nr);
    }
  }
  out.value /= static_cast<double>(depth);
  return out;
}

double cdd_step(SyntheticSet& synthetic, const ClassSamples& real,
                const CheckpointWindow& window, const CddSettings& settings) {
  if (!(settings.lr > 0.0)) throw ConfigError("cdd learning rate must be positive");
  if (window.empty()) throw StateError("checkpoint window is empty");
  return descend(synthetic, real, window.checkpoints(), settings);
}

SyntheticSet distill_full(SyntheticSet init, std::span<const Sample> real,
                          std::span<const Network> checkpoints,
                          std::size_t steps, const CddSettings& settings) {
  if (steps < 1) throw ConfigError("distill_full needs at least one step");
  if (!(settings.lr >= 0.0)) throw ConfigError("cdd learning rate must be >= 0");
  const ClassSamples grouped = group_by_class(real);
  for (std::size_t i = 0; i < steps; ++i) {
    descend(init, grouped, checkpoints, settings);
  }
  return init;
}

}  // namespace hmcil
