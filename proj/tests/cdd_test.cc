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
#include <filesystem>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "hmcil/cdd.h"
#include "hmcil/checkpoint_window.h"
#include "hmcil/errors.h"
#include "hmcil/io.h"
#include "hmcil/nn.h"
#include "test_util.h"

namespace hmcil {
namespace {

using testing::central_difference;
using testing::random_matrix;
using testing::random_network;
using testing::relative_error;
using testing::TempDir;

// Single linear layer, so the embedding is the input itself.
Network identity_embedding(std::size_t dim, std::size_t classes) {
  return Network({DenseLayer{Matrix(classes, dim), std::vector<double>(classes),
                             Activation::kIdentity}});
}

Matrix rows(std::initializer_list<std::vector<double>> values) {
  Matrix m;
  for (const auto& v : values) m.append_row(v);
  return m;
}

std::vector<Sample> class_samples(const Matrix& x, int label) {
  std::vector<Sample> out;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    out.push_back({{row.begin(), row.end()}, label, false});
  }
  return out;
}

struct Fixture {
  std::vector<Sample> real;
  SyntheticSet synthetic;
  std::vector<Network> checkpoints;
};

Fixture random_fixture(std::uint64_t seed, std::size_t m = 3,
                       std::size_t n_checkpoints = 2) {
  std::mt19937_64 rng(seed);
  Fixture f;
  for (int c = 0; c < 3; ++c) {
    Matrix x = random_matrix(8, 4, rng);
    for (double& v : x.values()) v += c;
    for (auto& s : class_samples(x, c)) f.real.push_back(std::move(s));
    f.synthetic.per_class[c] = random_matrix(m, 4, rng);
  }
  for (std::size_t i = 0; i < n_checkpoints; ++i) {
    f.checkpoints.push_back(random_network({4, 5, 3}, rng));
  }
  return f;
}

TEST(ObjectiveTest, ParseAndImplemented) {
  EXPECT_EQ(parse_objective("dm"), Objective::kDm);
  EXPECT_EQ(parse_objective("dsa"), Objective::kDsa);
  EXPECT_EQ(parse_objective("ftd"), Objective::kFtd);
  EXPECT_EQ(parse_objective("datadam"), Objective::kDataDam);
  EXPECT_TRUE(is_implemented(Objective::kDm));
  EXPECT_FALSE(is_implemented(Objective::kFtd));
  EXPECT_THROW(parse_objective("mtt"), ConfigError);
}

TEST(DmLossTest, IdenticalSetsGiveZero) {
  Fixture f = random_fixture(1);
  const ClassSamples grouped = group_by_class(f.real);
  f.synthetic.per_class = grouped;
  EXPECT_NEAR(dm_loss(f.synthetic, f.real, f.checkpoints), 0.0, 1e-12);
}

TEST(DmLossTest, HandArithmeticWithIdentityEmbedding) {
  SyntheticSet s;
  s.per_class[0] = rows({{1.0, 1.0}});
  const auto real = class_samples(rows({{1, 0}, {-1, 0}, {0, 2}, {0, -2}}), 0);
  const std::vector<Network> ckpt{identity_embedding(2, 1)};
  EXPECT_DOUBLE_EQ(dm_loss(s, real, ckpt), 2.0);
}

TEST(DmLossTest, TwoCheckpointsAverageSingleLosses) {
  const Fixture f = random_fixture(2);
  const double a = dm_loss(f.synthetic, f.real, {&f.checkpoints[0], 1});
  const double b = dm_loss(f.synthetic, f.real, {&f.checkpoints[1], 1});
  EXPECT_NEAR(dm_loss(f.synthetic, f.real, f.checkpoints), (a + b) / 2.0, 1e-12);
  EXPECT_GE(a, 0.0);
  EXPECT_GE(b, 0.0);
}

TEST(DmLossTest, ClassMissingFromRealIsDataError) {
  Fixture f = random_fixture(3);
  f.synthetic.per_class[7] = Matrix(2, 4);
  EXPECT_THROW(dm_loss(f.synthetic, f.real, f.checkpoints), DataError);
}

TEST(DmLossTest, NoCheckpointsIsStateError) {
  const Fixture f = random_fixture(3);
  EXPECT_THROW(dm_loss(f.synthetic, f.real, {}), StateError);
}

TEST(DmLossTest, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {4, 5, 6}) {
    Fixture f = random_fixture(seed);
    const ClassSamples grouped = group_by_class(f.real);
    const ObjectiveGradient g =
        objective_gradient(Objective::kDm, f.synthetic, grouped, f.checkpoints);
    EXPECT_NEAR(g.value, dm_loss(f.synthetic, f.real, f.checkpoints), 1e-12);
    for (auto& [c, x] : f.synthetic.per_class) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = central_difference(&x.values()[i], [&] {
          return dm_loss(f.synthetic, f.real, f.checkpoints);
        });
        EXPECT_LT(relative_error(g.grad.at(c).values()[i], fd), 1e-4)
            << "seed " << seed << " class " << c << " entry " << i;
      }
    }
  }
}

TEST(DmLossTest, InputGradientWithIdentityEmbedding) {
  SyntheticSet s;
  s.per_class[0] = rows({{1.0, 1.0}});
  const auto real = class_samples(rows({{1, 1}, {-1, -1}}), 0);
  const std::vector<Network> ckpt{identity_embedding(2, 1)};
  const ObjectiveGradient g =
      objective_gradient(Objective::kDm, s, group_by_class(real), ckpt);
  EXPECT_DOUBLE_EQ(g.grad.at(0)(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(g.grad.at(0)(0, 1), 2.0);

  s.per_class[0] = rows({{0.5, -0.5}, {-0.5, 0.5}});
  const ObjectiveGradient zero =
      objective_gradient(Objective::kDm, s, group_by_class(real), ckpt);
  for (double v : zero.grad.at(0).values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(DsaLossTest, IdenticalSetsGiveMinusOne) {
  Fixture f = random_fixture(7);
  f.synthetic.per_class = group_by_class(f.real);
  const DsaValue v = dsa_loss(f.synthetic, f.real, f.checkpoints);
  EXPECT_NEAR(v.value, -1.0, 1e-12);
  EXPECT_FALSE(v.degenerate);
}

TEST(DsaLossTest, OrthogonalGradientsGiveZero) {
  // Zero weights: the gradient for label 0 is (p0 - 1) * (1, -1) x (x, 1),
  // so samples at x = 1 and x = -1 give orthogonal gradients.
  SyntheticSet s;
  s.per_class[0] = rows({{1.0}});
  const auto real = class_samples(rows({{-1.0}}), 0);
  const std::vector<Network> ckpt{identity_embedding(1, 2)};
  const DsaValue v = dsa_loss(s, real, ckpt);
  EXPECT_NEAR(v.value, 0.0, 1e-15);
  EXPECT_FALSE(v.degenerate);
}

TEST(DsaLossTest, EqualsGradientMatchOfParameterGradients) {
  const Fixture f = random_fixture(8, 3, 1);
  const Network& net = f.checkpoints[0];
  double expected = 0.0;
  for (const auto& [c, x] : f.synthetic.per_class) {
    const Matrix r = group_by_class(f.real).at(c);
    const Network gs = grad_params(net, x, std::vector<int>(x.rows(), c)).grad;
    const Network gr = grad_params(net, r, std::vector<int>(r.rows(), c)).grad;
    expected += gradient_match(gs, gr).value / 3.0;
  }
  EXPECT_NEAR(dsa_loss(f.synthetic, f.real, f.checkpoints).value, expected, 1e-12);
}

TEST(DsaLossTest, GradientMatchIsScaleInvariant) {
  std::mt19937_64 rng(9);
  const Network a = random_network({4, 5, 3}, rng);
  const Network b = random_network({4, 5, 3}, rng);
  Network a5 = a;
  a5.scale(5.0);
  Network b5 = b;
  b5.scale(0.2);
  const double base = gradient_match(a, b).value;
  EXPECT_NEAR(gradient_match(a5, b).value, base, 1e-12);
  EXPECT_NEAR(gradient_match(a, b5).value, base, 1e-12);
  EXPECT_NEAR(gradient_match(a, a5).value, -1.0, 1e-12);
}

TEST(DsaLossTest, ZeroNormGradientIsFlaggedWorstCase) {
  // A dead hidden unit zeroes the first layer's gradient on both sides.
  DenseLayer hidden{Matrix(1, 2), {-1.0}, Activation::kRelu};
  DenseLayer head{Matrix(2, 1), {0.3, -0.3}, Activation::kIdentity};
  const std::vector<Network> ckpt{Network({hidden, head})};
  SyntheticSet s;
  s.per_class[0] = rows({{0.2, 0.1}});
  const auto real = class_samples(rows({{0.4, 0.3}, {0.1, 0.9}}), 0);
  const DsaValue v = dsa_loss(s, real, ckpt);
  EXPECT_TRUE(v.degenerate);
  // Layer 0 scores the worst case, the head scores -1.
  EXPECT_NEAR(v.value, (kDsaWorst - 1.0) / 2.0, 1e-12);
}

TEST(DsaLossTest, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {10, 11}) {
    Fixture f = random_fixture(seed, 2);
    const ClassSamples grouped = group_by_class(f.real);
    const ObjectiveGradient g =
        objective_gradient(Objective::kDsa, f.synthetic, grouped, f.checkpoints);
    ASSERT_FALSE(g.degenerate);
    for (auto& [c, x] : f.synthetic.per_class) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = central_difference(&x.values()[i], [&] {
          return dsa_loss(f.synthetic, f.real, f.checkpoints).value;
        });
        EXPECT_LT(relative_error(g.grad.at(c).values()[i], fd), 1e-4)
            << "seed " << seed << " class " << c << " entry " << i;
      }
    }
  }
}

TEST(CddStepTest, IdentityEmbeddingDmStep) {
  SyntheticSet s;
  s.per_class[0] = rows({{1.0, 1.0}});
  const auto real = class_samples(rows({{2, 0}, {-2, 0}}), 0);
  CheckpointWindow w(1);
  w.push(1, identity_embedding(2, 1));
  const double before = cdd_step(s, group_by_class(real), w, {.lr = 0.1});
  EXPECT_DOUBLE_EQ(before, 2.0);
  EXPECT_NEAR(s.per_class.at(0)(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(s.per_class.at(0)(0, 1), 0.8, 1e-15);
  EXPECT_EQ(s.step_count, 1u);
}

TEST(CddStepTest, StationaryPointLeavesSetUnchanged) {
  SyntheticSet s;
  s.per_class[0] = rows({{1.0, -1.0}, {-1.0, 1.0}});
  const auto real = class_samples(rows({{3, 3}, {-3, -3}}), 0);
  CheckpointWindow w(1);
  w.push(1, identity_embedding(2, 1));
  const Matrix before = s.per_class.at(0);
  cdd_step(s, group_by_class(real), w, {.lr = 0.5});
  EXPECT_EQ(s.per_class.at(0), before);
}

TEST(CddStepTest, IdenticalCheckpointsMatchSingleCheckpoint) {
  for (Objective objective : {Objective::kDm, Objective::kDsa}) {
    const Fixture f = random_fixture(12, 3, 1);
    const ClassSamples grouped = group_by_class(f.real);
    SyntheticSet one = f.synthetic;
    SyntheticSet many = f.synthetic;
    CheckpointWindow w1(1), w4(4);
    w1.push(1, f.checkpoints[0]);
    for (int j = 1; j <= 4; ++j) w4.push(j, f.checkpoints[0]);
    const CddSettings settings{.lr = 0.05, .objective = objective};
    cdd_step(one, grouped, w1, settings);
    cdd_step(many, grouped, w4, settings);
    for (const auto& [c, x] : one.per_class) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(many.per_class.at(c).values()[i], x.values()[i], 1e-12);
      }
    }
  }
}

TEST(CddStepTest, RejectsBadSettings) {
  Fixture f = random_fixture(13);
  const ClassSamples grouped = group_by_class(f.real);
  CheckpointWindow w(2);
  EXPECT_THROW(cdd_step(f.synthetic, grouped, w, {.lr = 0.1}), StateError);
  w.push(1, f.checkpoints[0]);
  EXPECT_THROW(cdd_step(f.synthetic, grouped, w, {.lr = 0.0}), ConfigError);
  EXPECT_THROW(cdd_step(f.synthetic, grouped, w, {.lr = -1.0}), ConfigError);
  EXPECT_THROW(cdd_step(f.synthetic, grouped, w,
                        {.lr = 0.1, .objective = Objective::kFtd}),
               ConfigError);
  EXPECT_THROW(cdd_step(f.synthetic, grouped, w,
                        {.lr = 0.1, .objective = Objective::kDataDam}),
               ConfigError);
}

TEST(CddStepTest, ClampKeepsUnitRange) {
  SyntheticSet s;
  s.per_class[0] = rows({{0.05, 0.95}});
  const auto real = class_samples(rows({{-5, 5}, {-5, 5}}), 0);
  CheckpointWindow w(1);
  w.push(1, identity_embedding(2, 1));
  cdd_step(s, group_by_class(real), w, {.lr = 0.1, .clamp = true});
  EXPECT_EQ(s.per_class.at(0)(0, 0), 0.0);
  EXPECT_EQ(s.per_class.at(0)(0, 1), 1.0);
  EXPECT_NO_THROW(s.validate(true));
}

TEST(DistillFullTest, ZeroLearningRateLeavesSetUnchanged) {
  const Fixture f = random_fixture(14);
  const SyntheticSet out =
      distill_full(f.synthetic, f.real, f.checkpoints, 5, {.lr = 0.0});
  EXPECT_EQ(out.per_class, f.synthetic.per_class);
  EXPECT_THROW(distill_full(f.synthetic, f.real, f.checkpoints, 0, {.lr = 0.1}),
               ConfigError);
}

TEST(DistillFullTest, DmIsNonIncreasingForSmallSteps) {
  const Fixture f = random_fixture(15, 3, 3);
  SyntheticSet s = f.synthetic;
  double prev = dm_loss(s, f.real, f.checkpoints);
  for (int i = 0; i < 50; ++i) {
    s = distill_full(std::move(s), f.real, f.checkpoints, 1, {.lr = 0.01});
    const double now = dm_loss(s, f.real, f.checkpoints);
    EXPECT_LE(now, prev + 1e-15) << "step " << i;
    prev = now;
  }
  EXPECT_LT(prev, dm_loss(f.synthetic, f.real, f.checkpoints));
}

TEST(DistillFullTest, FullWindowMatchesDistillFull) {
  for (double momentum : {0.0, 0.5}) {
    const Fixture f = random_fixture(16, 3, 4);
    const CddSettings settings{.lr = 0.05, .momentum = momentum};
    CheckpointWindow w(4);
    for (int j = 0; j < 4; ++j) w.push(j + 1, f.checkpoints[static_cast<std::size_t>(j)]);
    SyntheticSet sliding = f.synthetic;
    const ClassSamples grouped = group_by_class(f.real);
    for (int i = 0; i < 10; ++i) cdd_step(sliding, grouped, w, settings);
    const SyntheticSet full = distill_full(f.synthetic, f.real, f.checkpoints, 10, settings);
    EXPECT_EQ(sliding.step_count, full.step_count);
    for (const auto& [c, x] : full.per_class) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(sliding.per_class.at(c).values()[i], x.values()[i], 1e-12);
      }
    }
  }
}

TEST(SyntheticSetTest, InitDrawsRealRowsPerClass) {
  const Fixture f = random_fixture(17);
  std::mt19937_64 rng(3);
  const std::vector<int> classes{0, 2};
  const SyntheticSet s = init_synthetic(f.real, classes, 4, rng);
  EXPECT_EQ(s.classes(), classes);
  EXPECT_EQ(s.per_class_count(), 4u);
  EXPECT_EQ(s.total(), 8u);
  const ClassSamples grouped = group_by_class(f.real);
  for (const auto& [c, x] : s.per_class) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      bool found = false;
      const Matrix& real = grouped.at(c);
      for (std::size_t q = 0; q < real.rows() && !found; ++q) {
        found = std::equal(x.row(r).begin(), x.row(r).end(), real.row(q).begin());
      }
      EXPECT_TRUE(found);
    }
  }
  for (const Sample& smp : s.to_samples()) EXPECT_TRUE(smp.synthetic);
}

TEST(SyntheticSetTest, ValidateRejectsNonFiniteAndOutOfRange) {
  SyntheticSet s;
  s.per_class[0] = rows({{0.5, 1.5}});
  EXPECT_NO_THROW(s.validate(false));
  EXPECT_THROW(s.validate(true), StateError);
  s.per_class[0](0, 0) = std::nan("");
  EXPECT_THROW(s.validate(false), StateError);
}

TEST(SyntheticSetTest, BinaryAndCsvRoundTrip) {
  Fixture f = random_fixture(18);
  f.synthetic.step_count = 42;
  std::stringstream buf;
  write_synthetic(buf, f.synthetic);
  EXPECT_EQ(read_synthetic(buf), f.synthetic);
  TempDir dir("syn");
  save_synthetic(dir / "s.bin", f.synthetic);
  EXPECT_EQ(load_synthetic(dir / "s.bin"), f.synthetic);
  save_synthetic_csv(dir / "s.csv", f.synthetic);
  EXPECT_TRUE(std::filesystem::exists(dir / "s.csv"));
}

TEST(SyntheticSetTest, BadMagicIsParseError) {
  std::stringstream buf("XXXX0000000000000000");
  EXPECT_THROW(read_synthetic(buf), ParseError);
}

}  // namespace
}  // namespace hmcil
