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

//
// Binary formats. All integers and doubles are little-endian.
//
// Synthetic set ("HMSY"):
//   char[4] magic, u32 version, u64 dim, u64 classes, u64 step_count,
//   then per class: i64 class_id, u64 rows, rows*dim f64 (row-major).
//
// Network checkpoint ("HMNN"):
//   char[4] magic, u32 version, u64 layers,
//   then per layer: u8 activation (0 identity, 1 relu), u64 out, u64 in,
//   out*in f64 weights (row-major), out f64 bias.
//

#ifndef HMCIL_IO_H_
#define HMCIL_IO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "hmcil/cdd.h"
#include "hmcil/nn.h"

namespace hmcil {

void write_synthetic(std::ostream& out, const SyntheticSet& synthetic);
SyntheticSet read_synthetic(std::istream& in);

void save_synthetic(const std::filesystem::path& path, const SyntheticSet& synthetic);
SyntheticSet load_synthetic(const std::filesystem::path& path);

// One row per exemplar: class, then features x1..xd.
void save_synthetic_csv(const std::filesystem::path& path,
                        const SyntheticSet& synthetic);

void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

namespace le {

void put_u8(std::ostream& out, std::uint8_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_i64(std::ostream& out, std::int64_t v);
void put_f64(std::ostream& out, double v);

std::uint8_t get_u8(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
std::int64_t get_i64(std::istream& in);
double get_f64(std::istream& in);

}  // namespace le

}  // namespace hmcil

#endif  // HMCIL_IO_H_
