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

#include "hmcil/memory.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hmcil/errors.h"
#include "hmcil/io.h"

namespace hmcil {
namespace {

using json = nlohmann::json;

// Per-class (synthetic, real) counts of one entry.
std::map<int, std::pair<std::size_t, std::size_t>> entry_counts(
    const TaskMemory& entry) {
  std::map<int, std::pair<std::size_t, std::size_t>> counts;
  for (int c : entry.classes) counts[c] = {0, 0};
  for (const auto& [c, rows] : entry.synthetic.per_class) {
    if (!counts.count(c)) {
      throw StateError(fmt::format("synthetic class {} not declared by task {}",
                                   c, entry.task));
    }
    counts[c].first += rows.rows();
  }
  for (const auto& s : entry.real) {
    if (!counts.count(s.label)) {
      throw StateError(fmt::format("real exemplar of class {} not declared by task {}",
                                   s.label, entry.task));
    }
    ++counts[s.label].second;
  }
  return counts;
}

void check_entry(const TaskMemory& entry, std::size_t syn_share,
                 std::size_t real_share) {
  if (entry.classes.empty()) throw StateError("task entry declares no classes");
  if (!entry.real_indices.empty() && entry.real_indices.size() != entry.real.size()) {
    throw StateError("real index list does not match real exemplars");
  }
  for (const auto& [c, n] : entry_counts(entry)) {
    if (n.first != syn_share || n.second != real_share) {
      throw StateError(fmt::format(
          "budget violation for class {}: {} synthetic + {} real, expected {} + {}",
          c, n.first, n.second, syn_share, real_share));
    }
  }
}

}  // namespace

HybridMemory::HybridMemory(std::size_t k, double synthetic_ratio)
    : k_(k), ratio_(synthetic_ratio) {
  if (k_ < 1) throw ConfigError("exemplars per class must be >= 1");
  if (!(ratio_ >= 0.0 && ratio_ <= 1.0)) {
    throw ConfigError("synthetic ratio must lie in [0, 1]");
  }
}

std::size_t HybridMemory::synthetic_share(std::size_t k, double ratio) {
  return static_cast<std::size_t>(std::lround(static_cast<double>(k) * ratio));
}

std::vector<int> HybridMemory::stored_classes() const {
  std::vector<int> out;
  for (const auto& t : tasks_) out.insert(out.end(), t.classes.begin(), t.classes.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t HybridMemory::size() const {
  std::size_t n = 0;
  for (const auto& t : tasks_) n += t.synthetic.total() + t.real.size();
  return n;
}

std::vector<Sample> HybridMemory::exemplars() const {
  std::vector<Sample> out;
  out.reserve(size());
  for (const auto& t : tasks_) {
    auto syn = t.synthetic.to_samples();
    out.insert(out.end(), syn.begin(), syn.end());
    for (Sample s : t.real) {
      s.synthetic = false;
      out.push_back(std::move(s));
    }
  }
  return out;
}

void HybridMemory::check_budget() const {
  for (const auto& t : tasks_) {
    check_entry(t, synthetic_per_class(), real_per_class());
  }
  if (size() != stored_classes().size() * k_) {
    throw StateError("memory size differs from classes * k");
  }
}

void HybridMemory::append(TaskMemory entry) {
  const auto stored = stored_classes();
  for (int c : entry.classes) {
    if (std::binary_search(stored.begin(), stored.end(), c)) {
      throw StateError(fmt::format("class {} is already stored", c));
    }
  }
  std::set<int> unique(entry.classes.begin(), entry.classes.end());
  if (unique.size() != entry.classes.size()) {
    throw StateError("task entry declares a class twice");
  }
  check_entry(entry, synthetic_per_class(), real_per_class());
  for (auto& s : entry.real) s.synthetic = false;
  entry.synthetic.velocity.clear();
  tasks_.push_back(std::move(entry));
}

HybridMemory merge(HybridMemory memory, TaskMemory entry) {
  memory.append(std::move(entry));
  return memory;
}

std::vector<Sample> replay_batch(const HybridMemory& memory,
                                 std::size_t batch_size, std::uint64_t seed) {
  std::vector<Sample> all = memory.exemplars();
  if (all.empty()) throw StateError("replay from an empty memory");
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(batch_size, all.size()));
  std::vector<Sample> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(all[i]);
  return out;
}

void save_memory(const HybridMemory& memory, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest = {{"format", "hmcil-memory"},
                   {"version", 1},
                   {"k", memory.k()},
                   {"synthetic_ratio", memory.synthetic_ratio()},
                   {"tasks", json::array()}};
  for (const auto& t : memory.tasks()) {
    const std::string stem = fmt::format("task_{}", t.task);
    {
      std::ofstream out(dir / (stem + ".bin"), std::ios::binary);
      if (!out) throw DataError("cannot write memory file in " + dir.string());
      out.write("HMTK", 4);
      le::put_u32(out, 1);
      le::put_i64(out, t.task);
      write_synthetic(out, t.synthetic);
      const std::size_t dim = t.real.empty() ? 0 : t.real.front().x.size();
      le::put_u64(out, dim);
      le::put_u64(out, t.real.size());
      for (const auto& s : t.real) {
        le::put_i64(out, s.label);
        for (double v : s.x) le::put_f64(out, v);
      }
    }
    json counts = json::object();
    for (const auto& [c, n] : entry_counts(t)) {
      counts[std::to_string(c)] = {{"synthetic", n.first}, {"real", n.second}};
    }
    json index = {{"task", t.task},
                  {"classes", t.classes},
                  {"real_indices", t.real_indices},
                  {"synthetic_steps", t.synthetic.step_count},
                  {"counts", counts}};
    std::ofstream(dir / (stem + ".json")) << index.dump(2) << '\n';
    manifest["tasks"].push_back(t.task);
  }
  std::ofstream(dir / "memory.json") << manifest.dump(2) << '\n';
}

HybridMemory load_memory(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "memory.json");
  if (!mf) throw DataError("no memory.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw ParseError(std::string("memory.json: ") + e.what(), 0);
  }
  HybridMemory memory(manifest.at("k").get<std::size_t>(),
                      manifest.at("synthetic_ratio").get<double>());
  for (int task : manifest.at("tasks").get<std::vector<int>>()) {
    const std::string stem = fmt::format("task_{}", task);
    std::ifstream in(dir / (stem + ".bin"), std::ios::binary);
    if (!in) throw DataError("missing " + stem + ".bin");
    char magic[4] = {};
    in.read(magic, 4);
    if (std::string_view(magic, 4) != "HMTK" || le::get_u32(in) != 1) {
      throw ParseError(stem + ".bin: bad header", 0);
    }
    TaskMemory entry;
    entry.task = static_cast<int>(le::get_i64(in));
    entry.synthetic = read_synthetic(in);
    const auto dim = le::get_u64(in);
    const auto count = le::get_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
      Sample s;
      s.label = static_cast<int>(le::get_i64(in));
      s.x.resize(dim);
      for (double& v : s.x) v = le::get_f64(in);
      entry.real.push_back(std::move(s));
    }
    std::ifstream jf(dir / (stem + ".json"));
    const json index = json::parse(jf);
    entry.classes = index.at("classes").get<std::vector<int>>();
    entry.real_indices = index.at("real_indices").get<std::vector<std::size_t>>();
    memory.append(std::move(entry));
  }
  return memory;
}

}  // namespace hmcil
