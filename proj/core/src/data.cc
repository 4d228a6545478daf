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

#include "hmcil/data.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "hmcil/errors.h"

namespace hmcil {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

// Dense relabelling; integer labels sort numerically, others lexically.
void assign_labels(const std::vector<std::string>& raw, Dataset& out) {
  std::vector<std::string> unique(raw.begin(), raw.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const bool numeric = std::all_of(unique.begin(), unique.end(),
                                   [](const auto& s) { return parse_int(s); });
  if (numeric) {
    std::sort(unique.begin(), unique.end(), [](const auto& a, const auto& b) {
      return *parse_int(a) < *parse_int(b);
    });
  }
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    index[unique[i]] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.samples[i].label = index.at(raw[i]);
  }
  out.label_names = std::move(unique);
}

void scale_columns(Dataset& data) {
  for (std::size_t c = 0; c < data.dim; ++c) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : data.samples) {
      lo = std::min(lo, s.x[c]);
      hi = std::max(hi, s.x[c]);
    }
    if (lo >= 0.0 && hi <= 1.0) continue;
    const double span = hi - lo;
    for (auto& s : data.samples) {
      s.x[c] = span > 0.0 ? (s.x[c] - lo) / span : 0.0;
    }
  }
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing CSV header", 1);
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) {
    throw ParseError("CSV header has no 'label' column", line_no);
  }
  const auto label_col =
      static_cast<std::size_t>(std::distance(header.begin(), label_it));
  Dataset data;
  data.dim = header.size() - 1;
  if (data.dim == 0) throw ParseError("CSV has no feature columns", line_no);
  std::vector<std::string> raw_labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ShapeError(fmt::format("line {}: expected {} fields, got {}",
                                   line_no, header.size(), fields.size()));
    }
    Sample s;
    s.x.reserve(data.dim);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_col) continue;
      auto v = parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(fmt::format("malformed number '{}'", fields[c]),
                         line_no);
      }
      s.x.push_back(*v);
    }
    if (fields[label_col].empty()) throw ParseError("empty label", line_no);
    raw_labels.emplace_back(fields[label_col]);
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) throw DataError("CSV has no data rows");
  assign_labels(raw_labels, data);
  return data;
}

struct IdxTensor {
  std::uint8_t type = 0;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

template <typename T>
T read_big_endian(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) {
    throw ParseError("truncated IDX file", 0);
  }
  if constexpr (std::endian::native == std::endian::little) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<T>(bytes);
}

template <typename T>
void write_big_endian(std::ostream& out, T value) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::little) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(bytes.data(), bytes.size());
}

IdxTensor read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::array<unsigned char, 4> magic{};
  if (!in.read(reinterpret_cast<char*>(magic.data()), 4)) {
    throw ParseError("truncated IDX magic in " + path.string(), 0);
  }
  IdxTensor t;
  t.type = magic[2];
  const std::set<int> known{0x08, 0x09, 0x0B, 0x0C, 0x0D, 0x0E};
  if (magic[0] != 0 || magic[1] != 0 || !known.count(t.type) || magic[3] == 0) {
    throw ParseError(fmt::format("IDX magic mismatch in {}: {:02x}{:02x}{:02x}{:02x}",
                                 path.string(), magic[0], magic[1], magic[2],
                                 magic[3]),
                     0);
  }
  std::size_t count = 1;
  for (int i = 0; i < magic[3]; ++i) {
    t.dims.push_back(read_big_endian<std::uint32_t>(in));
    count *= t.dims.back();
  }
  t.values.resize(count);
  for (double& v : t.values) {
    switch (t.type) {
      case 0x08: v = read_big_endian<std::uint8_t>(in); break;
      case 0x09: v = read_big_endian<std::int8_t>(in); break;
      case 0x0B: v = read_big_endian<std::int16_t>(in); break;
      case 0x0C: v = read_big_endian<std::int32_t>(in); break;
      case 0x0D: v = read_big_endian<float>(in); break;
      default: v = read_big_endian<double>(in); break;
    }
  }
  return t;
}

Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels) {
  IdxTensor x = read_idx(images);
  IdxTensor y = read_idx(labels);
  if (y.dims.size() != 1) throw ShapeError("IDX label file must be 1-D");
  if (x.dims[0] != y.dims[0]) {
    throw ShapeError("IDX image and label counts differ");
  }
  Dataset data;
  const std::size_t n = x.dims[0];
  data.dim = n ? x.values.size() / n : 0;
  if (data.dim == 0) throw ShapeError("IDX images have zero features");
  std::vector<std::string> raw;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.x.assign(x.values.begin() + i * data.dim,
               x.values.begin() + (i + 1) * data.dim);
    // Unsigned bytes have a declared 0..255 range.
    if (x.type == 0x08) {
      for (double& v : s.x) v /= 255.0;
    }
    data.samples.push_back(std::move(s));
    raw.push_back(std::to_string(static_cast<long long>(y.values[i])));
  }
  assign_labels(raw, data);
  return data;
}

}  // namespace

Protocol parse_protocol(std::string_view name) {
  if (name == "zero-base" || name == "b0") return Protocol::kZeroBase;
  if (name == "half-base" || name == "half") return Protocol::kHalfBase;
  throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::kZeroBase ? "zero-base" : "half-base";
}

std::size_t TaskStream::classes_upto(std::size_t t) const {
  if (t > tasks.size()) throw RangeError("task index beyond stream length");
  std::size_t n = 0;
  for (std::size_t i = 0; i < t; ++i) n += tasks[i].classes.size();
  return n;
}

void TaskStream::validate() const {
  std::set<int> seen;
  for (const auto& task : tasks) {
    if (task.train.empty()) {
      throw DataError(fmt::format("task {} has no training data", task.id));
    }
    std::set<int> mine(task.classes.begin(), task.classes.end());
    for (int c : task.classes) {
      if (!seen.insert(c).second) {
        throw DataError(fmt::format("class {} appears in two tasks", c));
      }
    }
    for (const auto* split : {&task.train, &task.test}) {
      for (const auto& s : *split) {
        if (!mine.count(s.label)) {
          throw DataError(fmt::format("task {} holds a sample of class {}",
                                      task.id, s.label));
        }
        if (s.x.size() != feature_dim) {
          throw ShapeError("sample dimension differs from the stream's");
        }
      }
    }
  }
  if (seen.size() != total_classes) {
    throw DataError("task classes do not cover every class");
  }
}

std::vector<std::size_t> task_sizes(std::size_t classes, Protocol protocol,
                                    std::size_t phases) {
  if (phases < 1) throw ConfigError("phases must be >= 1");
  auto even = [](std::size_t total, std::size_t parts) {
    std::vector<std::size_t> sizes(parts, total / parts);
    for (std::size_t i = 0; i < total % parts; ++i) ++sizes[i];
    return sizes;
  };
  if (protocol == Protocol::kZeroBase) {
    if (classes < phases) {
      throw ConfigError(fmt::format(
          "zero-base needs at least {} classes, got {}", phases, classes));
    }
    return even(classes, phases);
  }
  const std::size_t base = (classes + 1) / 2;
  const std::size_t rest = classes - base;
  if (rest < phases) {
    throw ConfigError(fmt::format(
        "half-base with {} phases needs at least {} classes, got {}", phases,
        2 * phases, classes));
  }
  std::vector<std::size_t> sizes{base};
  for (std::size_t s : even(rest, phases)) sizes.push_back(s);
  return sizes;
}

std::vector<Sample> gen_gaussian_samples(const GaussianOptions& options) {
  if (options.classes < 2) throw ConfigError("need at least 2 classes");
  if (options.dim < 2) throw ConfigError("need at least 2 feature dimensions");
  if (options.per_class < 5) throw ConfigError("need at least 5 samples per class");
  if (!(options.spread >= 0.0)) throw ConfigError("spread must be >= 0");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> means;
  while (means.size() < options.classes) {
    std::vector<double> m(options.dim);
    for (double& v : m) v = options.mean_scale * normal(rng);
    // Reject near-duplicate means so every class is distinct.
    const bool distinct = std::all_of(means.begin(), means.end(), [&](const auto& o) {
      return squared_distance(m, o) > 1e-6 * options.mean_scale * options.mean_scale;
    });
    if (distinct) means.push_back(std::move(m));
  }
  std::vector<Sample> samples;
  samples.reserve(options.classes * options.per_class);
  for (std::size_t c = 0; c < options.classes; ++c) {
    for (std::size_t i = 0; i < options.per_class; ++i) {
      Sample s;
      s.label = static_cast<int>(c);
      s.x.resize(options.dim);
      for (std::size_t d = 0; d < options.dim; ++d) {
        s.x[d] = means[c][d] + options.spread * normal(rng);
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

TaskStream gen_gaussian_stream(const GaussianOptions& options,
                               Protocol protocol, std::size_t phases) {
  return split_stream(gen_gaussian_samples(options), protocol, phases,
                      options.seed);
}

TaskStream split_stream(std::span<const Sample> samples, Protocol protocol,
                        std::size_t phases, std::uint64_t seed) {
  if (samples.empty()) throw DataError("split_stream: no samples");
  std::map<int, std::vector<const Sample*>> by_class;
  const std::size_t dim = samples.front().x.size();
  for (const auto& s : samples) {
    if (s.x.size() != dim) throw ShapeError("inconsistent sample dimension");
    by_class[s.label].push_back(&s);
  }
  const auto sizes = task_sizes(by_class.size(), protocol, phases);

  std::mt19937_64 rng(seed);
  std::vector<int> order;
  for (const auto& [label, _] : by_class) order.push_back(label);
  std::shuffle(order.begin(), order.end(), rng);

  TaskStream stream;
  stream.feature_dim = dim;
  stream.total_classes = order.size();
  stream.protocol = protocol;
  stream.phases = phases;
  stream.seed = seed;
  stream.class_order = order;

  int next_label = 0;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    TaskSpec task;
    task.id = static_cast<int>(t + 1);
    for (std::size_t j = 0; j < sizes[t]; ++j, ++next_label) {
      const int source = order[static_cast<std::size_t>(next_label)];
      auto members = by_class.at(source);
      if (members.size() < 2) {
        throw DataError(fmt::format("class {} has fewer than 2 samples", source));
      }
      std::shuffle(members.begin(), members.end(), rng);
      const std::size_t n_test = std::max<std::size_t>(1, members.size() / 5);
      task.classes.push_back(next_label);
      for (std::size_t i = 0; i < members.size(); ++i) {
        Sample s = *members[i];
        s.label = next_label;
        s.synthetic = false;
        (i < members.size() - n_test ? task.train : task.test)
            .push_back(std::move(s));
      }
    }
    stream.tasks.push_back(std::move(task));
  }
  stream.validate();
  return stream;
}

DataFormat parse_data_format(std::string_view name) {
  if (name == "csv") return DataFormat::kCsv;
  if (name == "idx") return DataFormat::kIdx;
  throw ConfigError("unknown data format '" + std::string(name) + "'");
}

std::filesystem::path default_idx_labels_path(
    const std::filesystem::path& images) {
  std::string name = images.filename().string();
  const auto pos = name.find("images-idx3");
  if (pos != std::string::npos) {
    name.replace(pos, 11, "labels-idx1");
  } else {
    name += ".labels";
  }
  return images.parent_path() / name;
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const std::optional<std::filesystem::path>& labels_path) {
  Dataset data = format == DataFormat::kCsv
                     ? load_csv(path)
                     : load_idx(path, labels_path.value_or(
                                          default_idx_labels_path(path)));
  scale_columns(data);
  return data;
}

void write_csv(const std::filesystem::path& path,
               std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("write_csv: no samples");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const std::size_t dim = samples.front().x.size();
  for (std::size_t d = 0; d < dim; ++d) out << "x" << d + 1 << ',';
  out << "label\n";
  for (const auto& s : samples) {
    if (s.x.size() != dim) throw ShapeError("inconsistent sample dimension");
    for (double v : s.x) out << fmt::format("{:.17g},", v);
    out << s.label << '\n';
  }
}

void write_idx(const std::filesystem::path& images,
               const std::filesystem::path& labels,
               std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("write_idx: no samples");
  const std::size_t dim = samples.front().x.size();
  std::ofstream xo(images, std::ios::binary);
  if (!xo) throw DataError("cannot write " + images.string());
  xo.put(0).put(0).put(0x0E).put(2);
  write_big_endian<std::uint32_t>(xo, static_cast<std::uint32_t>(samples.size()));
  write_big_endian<std::uint32_t>(xo, static_cast<std::uint32_t>(dim));
  for (const auto& s : samples) {
    if (s.x.size() != dim) throw ShapeError("inconsistent sample dimension");
    for (double v : s.x) write_big_endian(xo, v);
  }
  const bool bytes = std::all_of(samples.begin(), samples.end(), [](const auto& s) {
    return s.label >= 0 && s.label <= 255;
  });
  std::ofstream yo(labels, std::ios::binary);
  if (!yo) throw DataError("cannot write " + labels.string());
  yo.put(0).put(0).put(bytes ? 0x08 : 0x0C).put(1);
  write_big_endian<std::uint32_t>(yo, static_cast<std::uint32_t>(samples.size()));
  for (const auto& s : samples) {
    if (bytes) {
      write_big_endian(yo, static_cast<std::uint8_t>(s.label));
    } else {
      write_big_endian(yo, static_cast<std::int32_t>(s.label));
    }
  }
}

}  // namespace hmcil
