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

#include "hmcil/checkpoint_window.h"

#include "hmcil/errors.h"

namespace hmcil {

CheckpointWindow::CheckpointWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("checkpoint window capacity must be >= 1");
}

bool CheckpointWindow::push(int epoch, Network snapshot) {
  if (!epochs_.empty() && epoch != epochs_.back() + 1) {
    throw StateError("checkpoint epochs must be contiguous");
  }
  epochs_.push_back(epoch);
  snapshots_.push_back(std::move(snapshot));
  if (snapshots_.size() <= capacity_) return false;
  epochs_.erase(epochs_.begin());
  snapshots_.erase(snapshots_.begin());
  return true;
}

void CheckpointWindow::clear() {
  epochs_.clear();
  snapshots_.clear();
}

}  // namespace hmcil
