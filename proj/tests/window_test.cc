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

#include <gtest/gtest.h>

#include "hmcil/checkpoint_window.h"
#include "hmcil/errors.h"
#include "hmcil/nn.h"

namespace hmcil {
namespace {

Network tagged(double v) {
  return Network({DenseLayer{Matrix(1, 1, v), {0.0}, Activation::kIdentity}});
}

TEST(CheckpointWindowTest, HoldsMostRecentEpochs) {
  constexpr std::size_t kTau = 4;
  CheckpointWindow w(kTau);
  for (int j = 1; j <= 10; ++j) {
    const bool evicted = w.push(j, tagged(j));
    EXPECT_EQ(evicted, j > static_cast<int>(kTau));
    const int first = std::max(1, j - static_cast<int>(kTau) + 1);
    ASSERT_EQ(w.size(), static_cast<std::size_t>(j - first + 1));
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_EQ(w.epochs()[i], first + static_cast<int>(i));
      EXPECT_EQ(w.checkpoints()[i].layers()[0].weight(0, 0), first + static_cast<double>(i));
    }
  }
}

TEST(CheckpointWindowTest, NonContiguousPushIsStateError) {
  CheckpointWindow w(3);
  w.push(1, tagged(1));
  EXPECT_THROW(w.push(3, tagged(3)), StateError);
  EXPECT_THROW(w.push(1, tagged(1)), StateError);
  EXPECT_EQ(w.size(), 1u);
}

TEST(CheckpointWindowTest, ZeroCapacityIsConfigError) {
  EXPECT_THROW(CheckpointWindow(0), ConfigError);
}

TEST(CheckpointWindowTest, ClearStartsOver) {
  CheckpointWindow w(2);
  w.push(1, tagged(1));
  w.push(2, tagged(2));
  w.clear();
  EXPECT_TRUE(w.empty());
  EXPECT_NO_THROW(w.push(5, tagged(5)));
}

}  // namespace
}  // namespace hmcil
