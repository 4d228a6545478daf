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


#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hmcil/cdd.h"
#include "hmcil/errors.h"
#include "hmcil/nn.h"
#include "hmcil/selector.h"
#include "test_util.h"

namespace hmcil {
namespace {

using testing::random_matrix;
using testing::random_network;

struct Fixture {
  std::vector<Sample> real;
  SyntheticSet synthetic;
  Network model;
};

Fixture make_fixture(std::uint64_t seed, int classes, std::size_t per_class,
                     std::size_t m) {
  std::mt19937_64 rng(seed);
  Fixture f;
  // Interleave classes so that indices of one class are not contiguous.
  const Matrix x = random_matrix(per_class * static_cast<std::size_t>(classes), 3, rng);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int c = static_cast<int>(r % static_cast<std::size_t>(classes));
    Sample s{{x.row(r).begin(), x.row(r).end()}, c, false};
    for (double& v : s.x) v += 0.5 * c;
    f.real.push_back(std::move(s));
  }
  if (m > 0) {
    for (int c = 0; c < classes; ++c) f.synthetic.per_class[c] = random_matrix(m, 3, rng);
  }
  f.model = random_network({3, 6, static_cast<std::size_t>(classes)}, rng);
  return f;
}

Network identity_embedding(std::size_t dim) {
  return Network({DenseLayer{Matrix(1, dim), {0.0}, Activation::kIdentity}});
}

std::size_t nearest_to_mean(const std::vector<Sample>& real) {
  std::vector<double> mean(real[0].x.size(), 0.0);
  for (const auto& s : real) {
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += s.x[d] / real.size();
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < real.size(); ++i) {
    if (squared_distance(real[i].x, mean) < squared_distance(real[best].x, mean)) best = i;
  }
  return best;
}

TEST(SelectorKindTest, Parse) {
  EXPECT_EQ(parse_selector("greedy"), SelectorKind::kGreedy);
  EXPECT_EQ(parse_selector("herding"), SelectorKind::kHerding);
  EXPECT_EQ(parse_selector("random"), SelectorKind::kRandom);
  EXPECT_EQ(to_string(SelectorKind::kHerding), "herding");
  EXPECT_THROW(parse_selector("kcenter"), ConfigError);
}

TEST(GreedySelectTest, FullPopulationSelectsEverything) {
  const Fixture f = make_fixture(1, 3, 5, 2);
  for (Objective o : {Objective::kDm, Objective::kDsa}) {
    const SelectionResult r = greedy_select(f.real, f.synthetic, f.model, 5, o);
    std::set<std::size_t> got(r.indices.begin(), r.indices.end());
    EXPECT_EQ(got.size(), f.real.size());
    EXPECT_EQ(r.trace.size(), f.real.size());
    EXPECT_NO_THROW(r.validate(5));
  }
}

TEST(GreedySelectTest, FirstPickIsBestSingleton) {
  for (Objective o : {Objective::kDm, Objective::kDsa}) {
    for (std::uint64_t seed : {2, 3, 4}) {
      const Fixture f = make_fixture(seed, 1, 12, 2);
      const SelectionResult r = greedy_select(f.real, f.synthetic, f.model, 1, o);
      ASSERT_EQ(r.indices.size(), 1u);
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t i = 0; i < f.real.size(); ++i) {
        const std::size_t idx[] = {i};
        const double v = selection_objective(f.real, f.synthetic, f.model, idx, o);
        if (v < best) best = v, arg = i;
      }
      EXPECT_EQ(r.indices[0], arg) << to_string(o) << " seed " << seed;
      EXPECT_NEAR(r.trace[0], best, 1e-12);
    }
  }
}

TEST(GreedySelectTest, FirstPickIsBestSingletonAcrossClasses) {
  const Fixture f = make_fixture(5, 3, 6, 1);
  const SelectionResult r = greedy_select(f.real, f.synthetic, f.model, 2);
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < f.real.size(); ++i) {
    const std::size_t idx[] = {i};
    const double v = selection_objective(f.real, f.synthetic, f.model, idx);
    if (v < best) best = v, arg = i;
  }
  EXPECT_EQ(r.indices[0], arg);
}

TEST(GreedySelectTest, EmptySyntheticPicksNearestToMean) {
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(15, 2, rng);
  const auto real = testing::samples_from(x, std::vector<int>(15, 0));
  const SelectionResult r = greedy_select(real, SyntheticSet{}, identity_embedding(2), 1);
  EXPECT_EQ(r.indices, std::vector<std::size_t>{nearest_to_mean(real)});
}

TEST(GreedySelectTest, TraceIsRoundMinimumAndMatchesDirectEvaluation) {
  for (Objective o : {Objective::kDm, Objective::kDsa}) {
    const Fixture f = make_fixture(7, 2, 6, 1);
    constexpr std::size_t kReal = 3;
    const SelectionResult r = greedy_select(f.real, f.synthetic, f.model, kReal, o);
    ASSERT_EQ(r.indices.size(), 2 * kReal);
    std::vector<std::size_t> chosen;
    std::map<int, std::size_t> counts;
    for (std::size_t round = 0; round < r.indices.size(); ++round) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < f.real.size(); ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
        if (counts[f.real[i].label] >= kReal) continue;
        auto trial = chosen;
        trial.push_back(i);
        best = std::min(best, selection_objective(f.real, f.synthetic, f.model, trial, o));
      }
      chosen.push_back(r.indices[round]);
      ++counts[f.real[r.indices[round]].label];
      const double direct = selection_objective(f.real, f.synthetic, f.model, chosen, o);
      EXPECT_NEAR(r.trace[round], direct, 1e-12) << to_string(o) << " round " << round;
      EXPECT_NEAR(r.trace[round], best, 1e-12) << to_string(o) << " round " << round;
    }
  }
}

TEST(GreedySelectTest, RespectsPerClassCap) {
  const Fixture f = make_fixture(8, 4, 9, 2);
  const SelectionResult r = greedy_select(f.real, f.synthetic, f.model, 3);
  EXPECT_EQ(r.indices.size(), 12u);
  for (const auto& [c, n] : r.per_class_counts) EXPECT_EQ(n, 3u) << c;
  std::map<int, std::size_t> counted;
  for (std::size_t i : r.indices) ++counted[f.real[i].label];
  EXPECT_EQ(counted, r.per_class_counts);
}

TEST(GreedySelectTest, Deterministic) {
  const Fixture f = make_fixture(9, 3, 8, 2);
  const SelectionResult a = greedy_select(f.real, f.synthetic, f.model, 4);
  const SelectionResult b = greedy_select(f.real, f.synthetic, f.model, 4);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(GreedySelectTest, EmptySyntheticDmMatchesHerdingPerClass) {
  const Fixture f = make_fixture(10, 3, 10, 0);
  const SelectionResult g = greedy_select(f.real, SyntheticSet{}, f.model, 4);
  const SelectionResult h = herding_select(f.real, f.model, 4);
  std::map<int, std::vector<std::size_t>> gc, hc;
  for (std::size_t i : g.indices) gc[f.real[i].label].push_back(i);
  for (std::size_t i : h.indices) hc[f.real[i].label].push_back(i);
  EXPECT_EQ(gc, hc);
}

TEST(GreedySelectTest, Errors) {
  const Fixture f = make_fixture(11, 2, 4, 1);
  EXPECT_THROW(greedy_select(f.real, f.synthetic, f.model, 5), DataError);
  EXPECT_THROW(greedy_select(f.real, f.synthetic, f.model, 0), ConfigError);
  EXPECT_THROW(greedy_select(f.real, f.synthetic, f.model, 1, Objective::kFtd),
               ConfigError);
  SyntheticSet stray = f.synthetic;
  stray.per_class[9] = Matrix(1, 3);
  EXPECT_THROW(greedy_select(f.real, stray, f.model, 1), DataError);
}

TEST(HerdingSelectTest, FirstPickNearestToMean) {
  std::mt19937_64 rng(12);
  const Matrix x = random_matrix(20, 3, rng);
  const auto real = testing::samples_from(x, std::vector<int>(20, 2));
  const SelectionResult r = herding_select(real, identity_embedding(3), 1);
  EXPECT_EQ(r.indices, std::vector<std::size_t>{nearest_to_mean(real)});
}

TEST(HerdingSelectTest, SampleAtMeanIsPickedFirst) {
  std::vector<Sample> real{{{2.0, 0.0}, 0, false},
                           {{-1.0, 1.0}, 0, false},
                           {{0.0, 0.0}, 0, false},
                           {{-1.0, -1.0}, 0, false}};
  // Mean is (0, 0) = real[2].
  const SelectionResult r = herding_select(real, identity_embedding(2), 2);
  EXPECT_EQ(r.indices[0], 2u);
  EXPECT_NEAR(r.trace[0], 0.0, 1e-15);
}

TEST(HerdingSelectTest, FullPopulation) {
  const Fixture f = make_fixture(13, 2, 5, 0);
  const SelectionResult r = herding_select(f.real, f.model, 5);
  EXPECT_EQ(std::set<std::size_t>(r.indices.begin(), r.indices.end()).size(),
            f.real.size());
  EXPECT_THROW(herding_select(f.real, f.model, 6), DataError);
}

TEST(RandomSelectTest, SeededAndStratified) {
  const Fixture f = make_fixture(14, 3, 10, 0);
  const SelectionResult a = random_select(f.real, 4, 99);
  const SelectionResult b = random_select(f.real, 4, 99);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_NO_THROW(a.validate(4));
  for (const auto& [c, n] : a.per_class_counts) EXPECT_EQ(n, 4u);
  EXPECT_NE(random_select(f.real, 4, 100).indices, a.indices);
  const SelectionResult all = random_select(f.real, 10, 1);
  EXPECT_EQ(std::set<std::size_t>(all.indices.begin(), all.indices.end()).size(), 30u);
  EXPECT_TRUE(std::isnan(a.trace[0]));
  EXPECT_FALSE(std::isnan(random_select(f.real, 4, 99, &f.model).trace[0]));
}

TEST(RandomSelectTest, UniformInclusionFrequency) {
  constexpr std::size_t kN = 10, kPick = 3, kSeeds = 2000;
  std::vector<Sample> real(kN, Sample{{0.0, 0.0}, 0, false});
  std::vector<double> hits(kN, 0.0);
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    for (std::size_t i : random_select(real, kPick, seed).indices) hits[i] += 1.0;
  }
  const double p = static_cast<double>(kPick) / kN;
  const double sigma = std::sqrt(p * (1 - p) / kSeeds);
  for (std::size_t i = 0; i < kN; ++i) {
    EXPECT_NEAR(hits[i] / kSeeds, p, 3 * sigma) << "candidate " << i;
  }
}

TEST(SelectionResultTest, JsonRoundTripAndValidation) {
  const Fixture f = make_fixture(15, 2, 6, 1);
  const SelectionResult r = greedy_select(f.real, f.synthetic, f.model, 2);
  const nlohmann::json j = to_json(r);
  EXPECT_TRUE(j.contains("indices"));
  EXPECT_TRUE(j.contains("trace"));
  EXPECT_TRUE(j.contains("counts"));
  const SelectionResult back = selection_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.indices, r.indices);
  EXPECT_EQ(back.per_class_counts, r.per_class_counts);
  for (std::size_t i = 0; i < r.trace.size(); ++i) EXPECT_DOUBLE_EQ(back.trace[i], r.trace[i]);

  SelectionResult dup = r;
  dup.indices[1] = dup.indices[0];
  EXPECT_THROW(dup.validate(2), StateError);
  EXPECT_THROW(r.validate(1), StateError);
  SelectionResult short_trace = r;
  short_trace.trace.pop_back();
  EXPECT_THROW(short_trace.validate(2), StateError);
}

}  // namespace
}  // namespace hmcil
