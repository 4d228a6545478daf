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

#ifndef HMCIL_SVG_H_
#define HMCIL_SVG_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hmcil {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartLabels {
  std::string title;
  std::string x;
  std::string y;
};

// A static line chart with markers, axes and a legend.
std::string line_chart_svg(const ChartLabels& labels,
                           std::span<const Series> series);

void write_line_chart(const std::filesystem::path& path,
                      const ChartLabels& labels, std::span<const Series> series);

}  // namespace hmcil

#endif  // HMCIL_SVG_H_
