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
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "hmcil/errors.h"
#include "hmcil/memory.h"
#include "test_util.h"

namespace hmcil {
namespace {

using testing::TempDir;

// Entry whose features encode (class, slot) so exemplars are distinguishable.
TaskMemory make_entry(int task, std::vector<int> classes, std::size_t k,
                      double ratio) {
  const std::size_t m = HybridMemory::synthetic_share(k, ratio);
  TaskMemory e;
  e.task = task;
  e.classes = classes;
  std::size_t next = 0;
  for (int c : classes) {
    Matrix s;
    for (std::size_t i = 0; i < m; ++i) s.append_row(std::vector<double>{double(c), 0.1 * i});
    if (m > 0) e.synthetic.per_class[c] = s;
    for (std::size_t i = m; i < k; ++i) {
      e.real.push_back({{double(c), 0.1 * i + 10.0}, c, false});
      e.real_indices.push_back(next++);
    }
  }
  return e;
}

TEST(HybridMemoryTest, SyntheticShareRounding) {
  EXPECT_EQ(HybridMemory::synthetic_share(20, 0.5), 10u);
  EXPECT_EQ(HybridMemory::synthetic_share(2, 0.5), 1u);
  EXPECT_EQ(HybridMemory::synthetic_share(5, 0.5), 3u);
  EXPECT_EQ(HybridMemory::synthetic_share(10, 0.0), 0u);
  EXPECT_EQ(HybridMemory::synthetic_share(10, 1.0), 10u);
  EXPECT_EQ(HybridMemory::synthetic_share(10, 0.25), 3u);
  EXPECT_THROW(HybridMemory(0, 0.5), ConfigError);
  EXPECT_THROW(HybridMemory(4, 1.5), ConfigError);
}

TEST(HybridMemoryTest, TwentyPerClassSplitsTenAndTen) {
  HybridMemory mem(20, 0.5);
  EXPECT_EQ(mem.synthetic_per_class(), 10u);
  EXPECT_EQ(mem.real_per_class(), 10u);
  mem.append(make_entry(1, {0, 1}, 20, 0.5));
  for (int c : {0, 1}) {
    std::size_t syn = 0, real = 0;
    for (const Sample& s : mem.exemplars()) {
      if (s.label != c) continue;
      (s.synthetic ? syn : real) += 1;
    }
    EXPECT_EQ(syn, 10u);
    EXPECT_EQ(real, 10u);
  }
  EXPECT_NO_THROW(mem.check_budget());
}

TEST(HybridMemoryTest, FirstTaskIntoEmptyMemory) {
  const HybridMemory mem = merge(HybridMemory(4, 0.5), make_entry(1, {0, 1, 2}, 4, 0.5));
  EXPECT_EQ(mem.stored_classes(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(mem.size(), 12u);
}

TEST(HybridMemoryTest, SizeIsClassesTimesKAfterEveryTask) {
  HybridMemory mem(5, 0.4);
  for (int t = 1; t <= 4; ++t) {
    mem.append(make_entry(t, {2 * (t - 1), 2 * (t - 1) + 1}, 5, 0.4));
    EXPECT_EQ(mem.size(), static_cast<std::size_t>(2 * t * 5));
    EXPECT_NO_THROW(mem.check_budget());
  }
}

TEST(HybridMemoryTest, DuplicateClassIsStateErrorAndLeavesMemory) {
  HybridMemory mem(4, 0.5);
  mem.append(make_entry(1, {0, 1}, 4, 0.5));
  const auto before = mem.exemplars();
  EXPECT_THROW(mem.append(make_entry(2, {1, 2}, 4, 0.5)), StateError);
  EXPECT_EQ(mem.exemplars(), before);
  EXPECT_EQ(mem.tasks().size(), 1u);
}

TEST(HybridMemoryTest, BudgetViolationIsStateError) {
  HybridMemory mem(4, 0.5);
  TaskMemory bad = make_entry(1, {0}, 4, 0.5);
  bad.real.pop_back();
  bad.real_indices.pop_back();
  EXPECT_THROW(mem.append(bad), StateError);
  TaskMemory wrong_ratio = make_entry(1, {0}, 4, 0.25);
  EXPECT_THROW(mem.append(wrong_ratio), StateError);
  EXPECT_TRUE(mem.empty());
}

TEST(HybridMemoryTest, MergeIsIndependentOfBatching) {
  HybridMemory a(3, 1.0 / 3.0), b(3, 1.0 / 3.0);
  const auto e1 = make_entry(1, {0, 1}, 3, 1.0 / 3.0);
  const auto e2 = make_entry(2, {2}, 3, 1.0 / 3.0);
  a.append(e1);
  a.append(e2);
  b = merge(merge(b, e1), e2);
  EXPECT_EQ(a.exemplars(), b.exemplars());
}

TEST(ReplayBatchTest, LargeBatchIsPermutation) {
  HybridMemory mem(4, 0.5);
  mem.append(make_entry(1, {0, 1}, 4, 0.5));
  const auto all = mem.exemplars();
  auto batch = replay_batch(mem, 100, 3);
  ASSERT_EQ(batch.size(), all.size());
  auto key = [](const Sample& s) { return std::make_pair(s.x, s.synthetic); };
  std::multiset<std::pair<std::vector<double>, bool>> want, got;
  for (const auto& s : all) want.insert(key(s));
  for (const auto& s : batch) got.insert(key(s));
  EXPECT_EQ(want, got);
}

TEST(ReplayBatchTest, SameSeedSameBatch) {
  HybridMemory mem(6, 0.5);
  mem.append(make_entry(1, {0, 1, 2}, 6, 0.5));
  EXPECT_EQ(replay_batch(mem, 5, 11), replay_batch(mem, 5, 11));
  EXPECT_NE(replay_batch(mem, 5, 11), replay_batch(mem, 5, 12));
}

TEST(ReplayBatchTest, EmptyMemoryIsStateError) {
  EXPECT_THROW(replay_batch(HybridMemory(2, 0.5), 4, 0), StateError);
}

TEST(ReplayBatchTest, UniformInclusionFrequency) {
  HybridMemory mem(4, 0.5);
  mem.append(make_entry(1, {0, 1, 2}, 4, 0.5));
  const auto all = mem.exemplars();
  constexpr std::size_t kDraws = 2000, kBatch = 5;
  std::vector<double> hits(all.size(), 0.0);
  for (std::size_t seed = 0; seed < kDraws; ++seed) {
    for (const Sample& s : replay_batch(mem, kBatch, seed)) {
      const auto it = std::find(all.begin(), all.end(), s);
      ASSERT_NE(it, all.end());
      hits[static_cast<std::size_t>(it - all.begin())] += 1.0;
    }
  }
  const double p = static_cast<double>(kBatch) / static_cast<double>(all.size());
  const double sigma = std::sqrt(p * (1 - p) / kDraws);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    EXPECT_NEAR(hits[i] / kDraws, p, 3 * sigma) << "exemplar " << i;
  }
}

TEST(MemoryIoTest, SaveLoadRoundTrip) {
  HybridMemory mem(5, 0.6);
  mem.append(make_entry(1, {0, 1}, 5, 0.6));
  mem.append(make_entry(2, {2, 3}, 5, 0.6));
  TempDir dir("mem");
  save_memory(mem, dir.path());
  const HybridMemory back = load_memory(dir.path());
  EXPECT_EQ(back.k(), 5u);
  EXPECT_DOUBLE_EQ(back.synthetic_ratio(), 0.6);
  EXPECT_EQ(back.exemplars(), mem.exemplars());
  ASSERT_EQ(back.tasks().size(), 2u);
  EXPECT_EQ(back.tasks()[1].real_indices, mem.tasks()[1].real_indices);
  EXPECT_THROW(load_memory(dir / "missing"), DataError);
}

}  // namespace
}  // namespace hmcil
