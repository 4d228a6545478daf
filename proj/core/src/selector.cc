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

#include "hmcil/selector.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include <fmt/format.h>

#include "hmcil/errors.h"

namespace hmcil {
namespace {

// Class slots in ascending label order.
struct ClassIndex {
  std::vector<int> labels;
  std::vector<std::size_t> slot_of_sample;
  std::vector<std::vector<std::size_t>> members;

  explicit ClassIndex(std::span<const Sample> real) {
    std::set<int> distinct;
    for (const auto& s : real) distinct.insert(s.label);
    labels.assign(distinct.begin(), distinct.end());
    members.resize(labels.size());
    slot_of_sample.reserve(real.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
      const std::size_t slot = slot_of(real[i].label);
      slot_of_sample.push_back(slot);
      members[slot].push_back(i);
    }
  }

  std::size_t slot_of(int label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) {
      throw DataError(fmt::format("class {} has no real samples", label));
    }
    return static_cast<std::size_t>(it - labels.begin());
  }
};

void check_request(const ClassIndex& index, std::size_t k_real) {
  if (k_real < 1) throw ConfigError("k_real must be >= 1");
  if (index.labels.empty()) throw DataError("no real samples to select from");
  for (std::size_t s = 0; s < index.labels.size(); ++s) {
    if (index.members[s].size() < k_real) {
      throw DataError(fmt::format("class {} has {} samples, fewer than k_real={}",
                                  index.labels[s], index.members[s].size(),
                                  k_real));
    }
  }
}

// Per-class running embedding sums for the dm objective.
class DmState {
 public:
  DmState(std::span<const Sample> real, const SyntheticSet& synthetic,
          const Network& model, const ClassIndex& index)
      : emb_(embed(model, to_matrix(real))),
        real_mean_(index.labels.size()),
        sum_(index.labels.size(), std::vector<double>(emb_.cols(), 0.0)),
        count_(index.labels.size(), 0) {
    for (std::size_t s = 0; s < index.labels.size(); ++s) {
      auto& mean = real_mean_[s];
      mean.assign(emb_.cols(), 0.0);
      for (std::size_t i : index.members[s]) {
        auto row = emb_.row(i);
        for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += row[e];
      }
      const double inv = 1.0 / static_cast<double>(index.members[s].size());
      for (double& v : mean) v *= inv;
    }
    for (const auto& [c, rows] : synthetic.per_class) {
      if (rows.rows() == 0) continue;
      const std::size_t s = index.slot_of(c);
      Matrix se = embed(model, rows);
      for (std::size_t r = 0; r < se.rows(); ++r) {
        auto row = se.row(r);
        for (std::size_t e = 0; e < row.size(); ++e) sum_[s][e] += row[e];
      }
      count_[s] += se.rows();
    }
  }

  double term(std::size_t s) const {
    if (count_[s] == 0) return dot(real_mean_[s], real_mean_[s]);
    return distance_of(s, count_[s], nullptr);
  }

  double term_with(std::size_t s, std::size_t i) const {
    return distance_of(s, count_[s] + 1, &i);
  }

  void add(std::size_t s, std::size_t i) {
    auto row = emb_.row(i);
    for (std::size_t e = 0; e < row.size(); ++e) sum_[s][e] += row[e];
    ++count_[s];
  }

 private:
  double distance_of(std::size_t s, std::size_t count,
                     const std::size_t* extra) const {
    const double inv = 1.0 / static_cast<double>(count);
    const auto& sum = sum_[s];
    const auto& target = real_mean_[s];
    double d = 0.0;
    for (std::size_t e = 0; e < sum.size(); ++e) {
      const double v = extra ? sum[e] + emb_(*extra, e) : sum[e];
      const double diff = v * inv - target[e];
      d += diff * diff;
    }
    return d;
  }

  Matrix emb_;
  std::vector<std::vector<double>> real_mean_;
  std::vector<std::vector<double>> sum_;
  std::vector<std::size_t> count_;
};

// Per-class running parameter-gradient sums for the dsa objective.
class DsaState {
 public:
  DsaState(std::span<const Sample> real, const SyntheticSet& synthetic,
           const Network& model, const ClassIndex& index, LossKind loss)
      : depth_(model.num_layers()) {
    if (loss != LossKind::kCrossEntropy) {
      throw ConfigError("dsa selection supports only the cross-entropy loss");
    }
    const std::size_t slots = index.labels.size();
    per_sample_.resize(real.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
      Matrix x;
      x.append_row(real[i].x);
      const int y = real[i].label;
      per_sample_[i] = flatten(grad_params(model, x, std::span(&y, 1)).grad);
    }
    real_grad_.resize(slots);
    sum_.assign(slots, std::vector<std::vector<double>>(depth_));
    count_.assign(slots, 0);
    for (std::size_t s = 0; s < slots; ++s) {
      Matrix x;
      for (std::size_t i : index.members[s]) x.append_row(real[i].x);
      std::vector<int> y(index.members[s].size(), index.labels[s]);
      real_grad_[s] = flatten(grad_params(model, x, y).grad);
      for (std::size_t l = 0; l < depth_; ++l) {
        sum_[s][l].assign(real_grad_[s][l].size(), 0.0);
      }
    }
    for (const auto& [c, rows] : synthetic.per_class) {
      if (rows.rows() == 0) continue;
      const std::size_t s = index.slot_of(c);
      std::vector<int> y(rows.rows(), c);
      auto g = flatten(grad_params(model, rows, y).grad);
      const double m = static_cast<double>(rows.rows());
      for (std::size_t l = 0; l < depth_; ++l) {
        for (std::size_t p = 0; p < g[l].size(); ++p) sum_[s][l][p] += m * g[l][p];
      }
      count_[s] += rows.rows();
    }
  }

  double term(std::size_t s) const {
    if (count_[s] == 0) return kDsaWorst;
    return score(s, nullptr);
  }
  double term_with(std::size_t s, std::size_t i) const { return score(s, &i); }

  void add(std::size_t s, std::size_t i) {
    for (std::size_t l = 0; l < depth_; ++l) {
      auto& dst = sum_[s][l];
      const auto& src = per_sample_[i][l];
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += src[p];
    }
    ++count_[s];
  }

 private:
  using Blocks = std::vector<std::vector<double>>;

  Blocks flatten(const Network& g) const {
    Blocks out(depth_);
    for (std::size_t l = 0; l < depth_; ++l) out[l] = g.layer_values(l);
    return out;
  }

  // Cosine is scale-invariant, so the running sum stands in for the mean.
  double score(std::size_t s, const std::size_t* extra) const {
    double total = 0.0;
    for (std::size_t l = 0; l < depth_; ++l) {
      const auto& sum = sum_[s][l];
      const auto& r = real_grad_[s][l];
      double ss = 0.0, sr = 0.0, rr = 0.0;
      for (std::size_t p = 0; p < sum.size(); ++p) {
        const double v = extra ? sum[p] + per_sample_[*extra][l][p] : sum[p];
        ss += v * v;
        sr += v * r[p];
        rr += r[p] * r[p];
      }
      if (ss == 0.0 || rr == 0.0) {
        total += kDsaWorst;
      } else {
        total -= sr / (std::sqrt(ss) * std::sqrt(rr));
      }
    }
    return total / static_cast<double>(depth_);
  }

  std::size_t depth_;
  std::vector<Blocks> per_sample_;
  std::vector<Blocks> real_grad_;
  std::vector<Blocks> sum_;
  std::vector<std::size_t> count_;
};

template <typename State>
SelectionResult run_greedy(const ClassIndex& index, State& state,
                           std::size_t k_real) {
  const std::size_t slots = index.labels.size();
  const std::size_t n = index.slot_of_sample.size();
  const double inv_slots = 1.0 / static_cast<double>(slots);
  std::vector<double> terms(slots);
  for (std::size_t s = 0; s < slots; ++s) terms[s] = state.term(s);
  std::vector<std::size_t> count(slots, 0);
  std::vector<bool> chosen(n, false);
  SelectionResult out;
  std::vector<double> except(slots);
  while (out.indices.size() < slots * k_real) {
    // Sum of the other classes' terms, in fixed class order.
    for (std::size_t s = 0; s < slots; ++s) {
      double acc = 0.0;
      for (std::size_t o = 0; o < slots; ++o) {
        if (o != s) acc += terms[o];
      }
      except[s] = acc;
    }
    // The minimum is reset every round.
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = index.slot_of_sample[i];
      if (chosen[i] || count[s] >= k_real) continue;
      const double d = (except[s] + state.term_with(s, i)) * inv_slots;
      if (d < best || best_i == n) {
        best = d;
        best_i = i;
      }
    }
    if (best_i == n) throw StateError("greedy selection found no eligible candidate");
    const std::size_t s = index.slot_of_sample[best_i];
    state.add(s, best_i);
    terms[s] = state.term(s);
    chosen[best_i] = true;
    ++count[s];
    out.indices.push_back(best_i);
    out.trace.push_back(best);
  }
  for (std::size_t s = 0; s < slots; ++s) out.per_class_counts[index.labels[s]] = count[s];
  return out;
}

// dm objective with an empty synthetic set after each pick, in order.
std::vector<double> dm_trace(std::span<const Sample> real, const Network& model,
                             const ClassIndex& index,
                             std::span<const std::size_t> picks) {
  DmState state(real, SyntheticSet{}, model, index);
  const std::size_t slots = index.labels.size();
  std::vector<double> terms(slots);
  for (std::size_t s = 0; s < slots; ++s) terms[s] = state.term(s);
  std::vector<double> trace;
  for (std::size_t i : picks) {
    const std::size_t s = index.slot_of_sample[i];
    state.add(s, i);
    terms[s] = state.term(s);
    double acc = 0.0;
    for (double t : terms) acc += t;
    trace.push_back(acc / static_cast<double>(slots));
  }
  return trace;
}

void check_synthetic_classes(const ClassIndex& index, const SyntheticSet& synthetic) {
  for (const auto& [c, rows] : synthetic.per_class) {
    if (rows.rows() > 0) index.slot_of(c);
  }
}

}  // namespace

SelectorKind parse_selector(std::string_view name) {
  if (name == "greedy") return SelectorKind::kGreedy;
  if (name == "herding") return SelectorKind::kHerding;
  if (name == "random") return SelectorKind::kRandom;
  throw ConfigError("unknown selector '" + std::string(name) + "'");
}

std::string_view to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::kGreedy: return "greedy";
    case SelectorKind::kHerding: return "herding";
    case SelectorKind::kRandom: return "random";
  }
  return "?";
}

void SelectionResult::validate(std::size_t k_real) const {
  std::set<std::size_t> unique(indices.begin(), indices.end());
  if (unique.size() != indices.size()) throw StateError("duplicate selected index");
  if (trace.size() != indices.size()) throw StateError("trace length differs from selection size");
  std::size_t total = 0;
  for (const auto& [c, n] : per_class_counts) {
    if (n > k_real) {
      throw StateError(fmt::format("class {} holds {} picks, cap is {}", c, n, k_real));
    }
    total += n;
  }
  if (total != indices.size()) throw StateError("per-class counts do not sum to the selection size");
}

SelectionResult greedy_select(std::span<const Sample> real,
                              const SyntheticSet& synthetic,
                              const Network& model, std::size_t k_real,
                              Objective objective, LossKind loss) {
  ClassIndex index(real);
  check_request(index, k_real);
  check_synthetic_classes(index, synthetic);
  switch (objective) {
    case Objective::kDm: {
      DmState state(real, synthetic, model, index);
      return run_greedy(index, state, k_real);
    }
    case Objective::kDsa: {
      DsaState state(real, synthetic, model, index, loss);
      return run_greedy(index, state, k_real);
    }
    default:
      throw ConfigError(fmt::format("objective '{}' is not implemented",
                                    to_string(objective)));
  }
}

SelectionResult herding_select(std::span<const Sample> real,
                               const Network& model, std::size_t k_real) {
  ClassIndex index(real);
  check_request(index, k_real);
  const Matrix emb = embed(model, to_matrix(real));
  SelectionResult out;
  for (std::size_t s = 0; s < index.labels.size(); ++s) {
    const auto& members = index.members[s];
    std::vector<double> mean(emb.cols(), 0.0);
    for (std::size_t i : members) {
      for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += emb(i, e);
    }
    for (double& v : mean) v /= static_cast<double>(members.size());
    std::vector<double> running(emb.cols(), 0.0);
    std::vector<bool> taken(members.size(), false);
    for (std::size_t j = 1; j <= k_real; ++j) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_m = members.size();
      for (std::size_t m = 0; m < members.size(); ++m) {
        if (taken[m]) continue;
        double d = 0.0;
        for (std::size_t e = 0; e < mean.size(); ++e) {
          const double diff =
              mean[e] - (running[e] + emb(members[m], e)) / static_cast<double>(j);
          d += diff * diff;
        }
        if (d < best || best_m == members.size()) {
          best = d;
          best_m = m;
        }
      }
      taken[best_m] = true;
      for (std::size_t e = 0; e < mean.size(); ++e) {
        running[e] += emb(members[best_m], e);
      }
      out.indices.push_back(members[best_m]);
    }
    out.per_class_counts[index.labels[s]] = k_real;
  }
  out.trace = dm_trace(real, model, index, out.indices);
  return out;
}

SelectionResult random_select(std::span<const Sample> real, std::size_t k_real,
                              std::uint64_t seed, const Network* model) {
  ClassIndex index(real);
  check_request(index, k_real);
  std::mt19937_64 rng(seed);
  SelectionResult out;
  for (std::size_t s = 0; s < index.labels.size(); ++s) {
    std::vector<std::size_t> members = index.members[s];
    std::shuffle(members.begin(), members.end(), rng);
    out.indices.insert(out.indices.end(), members.begin(),
                       members.begin() + static_cast<std::ptrdiff_t>(k_real));
    out.per_class_counts[index.labels[s]] = k_real;
  }
  if (model) {
    out.trace = dm_trace(real, *model, index, out.indices);
  } else {
    out.trace.assign(out.indices.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

double selection_objective(std::span<const Sample> real,
                           const SyntheticSet& synthetic, const Network& model,
                           std::span<const std::size_t> indices,
                           Objective objective, LossKind loss) {
  if (!is_implemented(objective)) {
    throw ConfigError(fmt::format("objective '{}' is not implemented",
                                  to_string(objective)));
  }
  ClassIndex index(real);
  check_synthetic_classes(index, synthetic);
  const std::size_t slots = index.labels.size();
  double total = 0.0;
  for (std::size_t s = 0; s < slots; ++s) {
    const int c = index.labels[s];
    Matrix real_rows, union_rows;
    for (std::size_t i : index.members[s]) real_rows.append_row(real[i].x);
    for (std::size_t i : indices) {
      if (i >= real.size()) throw RangeError(fmt::format("index {} out of range", i));
      if (real[i].label == c) union_rows.append_row(real[i].x);
    }
    auto syn = synthetic.per_class.find(c);
    if (syn != synthetic.per_class.end()) {
      for (std::size_t r = 0; r < syn->second.rows(); ++r) {
        union_rows.append_row(syn->second.row(r));
      }
    }
    if (objective == Objective::kDm) {
      const auto mean_r = column_mean(embed(model, real_rows));
      if (union_rows.rows() == 0) {
        total += dot(mean_r, mean_r);
      } else {
        total += squared_distance(column_mean(embed(model, union_rows)), mean_r);
      }
      continue;
    }
    if (loss != LossKind::kCrossEntropy) {
      throw ConfigError("dsa selection supports only the cross-entropy loss");
    }
    if (union_rows.rows() == 0) {
      total += kDsaWorst;
      continue;
    }
    const Network gu =
        grad_params(model, union_rows, std::vector<int>(union_rows.rows(), c)).grad;
    const Network gr =
        grad_params(model, real_rows, std::vector<int>(real_rows.rows(), c)).grad;
    double term = 0.0;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
      const auto u = gu.layer_values(l);
      const auto r = gr.layer_values(l);
      const double nu = std::sqrt(dot(u, u));
      const double nr = std::sqrt(dot(r, r));
      term += (nu == 0.0 || nr == 0.0) ? kDsaWorst : -dot(u, r) / (nu * nr);
    }
    total += term / static_cast<double>(model.num_layers());
  }
  return total / static_cast<double>(slots);
}

nlohmann::json to_json(const SelectionResult& result) {
  nlohmann::json trace = nlohmann::json::array();
  for (double v : result.trace) {
    trace.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  }
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [c, n] : result.per_class_counts) counts[std::to_string(c)] = n;
  return {{"indices", result.indices}, {"trace", trace}, {"counts", counts}};
}

SelectionResult selection_from_json(const nlohmann::json& j) {
  SelectionResult out;
  out.indices = j.at("indices").get<std::vector<std::size_t>>();
  for (const auto& v : j.at("trace")) {
    out.trace.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : v.get<double>());
  }
  for (const auto& [key, value] : j.at("counts").items()) {
    out.per_class_counts[std::stoi(key)] = value.get<std::size_t>();
  }
  return out;
}

}  // namespace hmcil
