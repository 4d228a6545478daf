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


#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hmcil/errors.h"
#include "hmcil/svg.h"
#include "test_util.h"

namespace hmcil {
namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

TEST(SvgTest, OnePolylinePerSeriesAndEscapedLabels) {
  const std::vector<Series> series{{"a<b", {1, 2, 3}, {10, 20, 15}},
                                   {"c&d", {1, 2, 3}, {5, 6, 7}}};
  const std::string svg = line_chart_svg({"AA \"vs\" task", "task", "AA"}, series);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  EXPECT_EQ(count(svg, "<circle"), 6u);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_NE(svg.find("c&amp;d"), std::string::npos);
  EXPECT_NE(svg.find("AA &quot;vs&quot; task"), std::string::npos);
}

TEST(SvgTest, NonFinitePointsAreSkippedAndFlatSeriesRender) {
  const std::vector<Series> series{{"s", {0, 1, 2}, {5, std::nan(""), 5}}};
  const std::string svg = line_chart_svg({}, series);
  EXPECT_EQ(count(svg, "<circle"), 2u);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(SvgTest, MismatchedSeriesIsShapeError) {
  const std::vector<Series> series{{"s", {0, 1}, {1}}};
  EXPECT_THROW(line_chart_svg({}, series), ShapeError);
}

TEST(SvgTest, WritesFileCreatingDirectories) {
  testing::TempDir dir("svg");
  const std::vector<Series> series{{"s", {0, 1}, {1, 2}}};
  write_line_chart(dir / "plots/x.svg", {"t", "x", "y"}, series);
  EXPECT_TRUE(std::filesystem::exists(dir / "plots/x.svg"));
}

}  // namespace
}  // namespace hmcil
