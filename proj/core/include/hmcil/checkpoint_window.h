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

#ifndef HMCIL_CHECKPOINT_WINDOW_H_
#define HMCIL_CHECKPOINT_WINDOW_H_

#include <span>
#include <vector>

#include "hmcil/nn.h"

namespace hmcil {

// The `capacity` most recent per-epoch parameter snapshots, oldest first.
class CheckpointWindow {
 public:
  explicit CheckpointWindow(std::size_t capacity);

  // Epochs must be pushed in strictly increasing, contiguous order.
  // Returns true if the oldest snapshot was evicted.
  bool push(int epoch, Network snapshot);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }
  void clear();

  std::span<const Network> checkpoints() const { return snapshots_; }
  const std::vector<int>& epochs() const { return epochs_; }

 private:
  std::size_t capacity_;
  std::vector<int> epochs_;
  std::vector<Network> snapshots_;
};

}  // namespace hmcil

#endif  // HMCIL_CHECKPOINT_WINDOW_H_
