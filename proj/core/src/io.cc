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

#include "hmcil/io.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "hmcil/errors.h"

namespace hmcil {
namespace le {
namespace {

template <typename T>
void put(std::ostream& out, T value) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) {
    throw ParseError("truncated binary stream", 0);
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<T>(bytes);
}

}  // namespace

void put_u8(std::ostream& out, std::uint8_t v) { put(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void put_i64(std::ostream& out, std::int64_t v) { put(out, v); }
void put_f64(std::ostream& out, double v) { put(out, v); }

std::uint8_t get_u8(std::istream& in) { return get<std::uint8_t>(in); }
std::uint32_t get_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get<std::uint64_t>(in); }
std::int64_t get_i64(std::istream& in) { return get<std::int64_t>(in); }
double get_f64(std::istream& in) { return get<double>(in); }

}  // namespace le

namespace {

constexpr std::uint32_t kVersion = 1;
// Upper bound on any single declared size, to reject corrupt headers.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

void expect_magic(std::istream& in, const char* magic) {
  char got[4] = {};
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw ParseError(fmt::format("bad magic, expected '{}'", magic), 0);
  }
  const auto version = le::get_u32(in);
  if (version != kVersion) {
    throw ParseError(fmt::format("unsupported format version {}", version), 0);
  }
}

std::uint64_t get_count(std::istream& in) {
  const auto n = le::get_u64(in);
  if (n > kMaxCount) throw ParseError("implausible size in header", 0);
  return n;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_synthetic(std::ostream& out, const SyntheticSet& synthetic) {
  const std::size_t dim = synthetic.dim();
  out.write("HMSY", 4);
  le::put_u32(out, kVersion);
  le::put_u64(out, dim);
  le::put_u64(out, synthetic.per_class.size());
  le::put_u64(out, synthetic.step_count);
  for (const auto& [c, rows] : synthetic.per_class) {
    if (rows.rows() > 0 && rows.cols() != dim) {
      throw ShapeError("synthetic classes have different widths");
    }
    le::put_i64(out, c);
    le::put_u64(out, rows.rows());
    for (double v : rows.values()) le::put_f64(out, v);
  }
}

SyntheticSet read_synthetic(std::istream& in) {
  expect_magic(in, "HMSY");
  SyntheticSet out;
  const auto dim = get_count(in);
  const auto classes = get_count(in);
  out.step_count = le::get_u64(in);
  for (std::uint64_t i = 0; i < classes; ++i) {
    const auto c = static_cast<int>(le::get_i64(in));
    const auto rows = get_count(in);
    Matrix m(rows, dim);
    for (double& v : m.values()) v = le::get_f64(in);
    out.per_class.emplace(c, std::move(m));
  }
  return out;
}

void save_synthetic(const std::filesystem::path& path,
                    const SyntheticSet& synthetic) {
  auto out = open_out(path);
  write_synthetic(out, synthetic);
}

SyntheticSet load_synthetic(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_synthetic(in);
}

void save_synthetic_csv(const std::filesystem::path& path,
                        const SyntheticSet& synthetic) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "class";
  for (std::size_t d = 0; d < synthetic.dim(); ++d) out << ",x" << d + 1;
  out << '\n';
  for (const auto& [c, rows] : synthetic.per_class) {
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      out << c;
      for (double v : rows.row(r)) out << fmt::format(",{:.17g}", v);
      out << '\n';
    }
  }
}

void write_network(std::ostream& out, const Network& net) {
  out.write("HMNN", 4);
  le::put_u32(out, kVersion);
  le::put_u64(out, net.num_layers());
  for (const auto& layer : net.layers()) {
    le::put_u8(out, layer.activation == Activation::kRelu ? 1 : 0);
    le::put_u64(out, layer.out());
    le::put_u64(out, layer.in());
    for (double v : layer.weight.values()) le::put_f64(out, v);
    for (double v : layer.bias) le::put_f64(out, v);
  }
}

Network read_network(std::istream& in) {
  expect_magic(in, "HMNN");
  const auto depth = get_count(in);
  std::vector<DenseLayer> layers;
  for (std::uint64_t l = 0; l < depth; ++l) {
    const auto act = le::get_u8(in);
    if (act > 1) throw ParseError("unknown activation tag", 0);
    const auto out_w = get_count(in);
    const auto in_w = get_count(in);
    DenseLayer layer{Matrix(out_w, in_w), std::vector<double>(out_w),
                     act ? Activation::kRelu : Activation::kIdentity};
    for (double& v : layer.weight.values()) v = le::get_f64(in);
    for (double& v : layer.bias) v = le::get_f64(in);
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

void save_network(const std::filesystem::path& path, const Network& net) {
  auto out = open_out(path);
  write_network(out, net);
}

Network load_network(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_network(in);
}

}  // namespace hmcil
