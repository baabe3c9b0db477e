/* Copyright 2026 The GDWS Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <limits>
#include <stdexcept>

#include <gtest/gtest.h>

#include "gdws/approx.hpp"
#include "gdws/conv.hpp"
#include "test_support.hpp"

namespace gdws {
namespace {

using testing::brute_error;
using testing::brute_min_error;
using testing::brute_min_total;
using testing::channel_energies;
using testing::count_nonzeros;
using testing::energy_rel_diff;
using testing::make_spec;
using testing::random_matrix;
using testing::sparse_toy;

WeightMatrix composed(const GdwsDecomposition& d) {
  return compose(d.factors.pw, d.factors.gdw, d.spec, d.g);
}

int rank_of(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > 1e-10 * s(0) ? 1 : 0;
  return r;
}

// Random instance whose channels get different energy scales so greedy
// choices are not decided by ties.
WeightMatrix random_instance(Rng& rng, int c, int k, int m) {
  Matrix w = random_matrix(rng, m, c * k * k);
  for (int ch = 0; ch < c; ++ch) w.middleCols(ch * k * k, k * k) *= 0.3 + 2.0 * rng.uniform();
  return WeightMatrix(make_spec(c, k, m), w);
}

AlphaVector random_alpha(Rng& rng, int c) {
  AlphaVector a;
  for (int i = 0; i < c; ++i) a.push_back(0.1 + 3.0 * rng.uniform());
  return a;
}

TEST(WeightedErrorTest, IdenticalMatricesGiveZero) {
  Rng rng(1);
  const WeightMatrix w(make_spec(3, 2, 4), random_matrix(rng, 4, 12));
  EXPECT_EQ(weighted_error_sq(w, w, alpha_uniform(3)), 0.0);
}

TEST(WeightedErrorTest, UniformAlphaIsFrobenius) {
  Rng rng(2);
  const auto spec = make_spec(3, 2, 4);
  const WeightMatrix w(spec, random_matrix(rng, 4, 12));
  const WeightMatrix q(spec, random_matrix(rng, 4, 12));
  EXPECT_NEAR(weighted_error_sq(w, q, alpha_uniform(3)), (w.data() - q.data()).squaredNorm(),
              1e-12);
}

TEST(WeightedErrorTest, HandComputedTwoChannels) {
  const auto spec = make_spec(2, 1, 1);
  const WeightMatrix w(spec, Matrix::Zero(1, 2));
  Matrix q(1, 2);
  q << 1.0, 2.0;
  const AlphaVector alpha{2.0, 3.0};
  EXPECT_DOUBLE_EQ(weighted_error_sq(w, WeightMatrix(spec, q), alpha), 14.0);
}

TEST(WeightedErrorTest, RejectsMismatchedShapes) {
  const WeightMatrix a(make_spec(2, 1, 1), Matrix::Zero(1, 2));
  const WeightMatrix b(make_spec(2, 1, 2), Matrix::Zero(2, 2));
  EXPECT_THROW(weighted_error_sq(a, b, alpha_uniform(2)), ShapeError);
  EXPECT_THROW(weighted_error_sq(a, a, alpha_uniform(3)), ShapeError);
}

TEST(MegoTest, SparseToyBudgetFourIsExact) {
  const WeightMatrix w = sparse_toy();
  const auto d = mego(w, alpha_uniform(3), 4);
  EXPECT_EQ(d.g, (ChannelDistribution{2, 1, 1}));
  EXPECT_EQ(d.achieved_error_sq, 0.0);
  EXPECT_LE((composed(d).data() - w.data()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MegoTest, SparseToySmallBudgetKeepsLargestEnergies) {
  // Channel energies: {9, 4}, {25}, {1}.
  const auto d = mego(sparse_toy(), alpha_uniform(3), 2);
  EXPECT_EQ(d.g, (ChannelDistribution{1, 1, 0}));
  EXPECT_NEAR(d.achieved_error_sq, 5.0, 1e-12);
}

TEST(MegoTest, SaturatesAtRanks) {
  const auto d = mego(sparse_toy(), alpha_uniform(3), 100);
  EXPECT_EQ(d.g, (ChannelDistribution{2, 1, 1}));
  EXPECT_EQ(d.total_filters(), 4);
}

TEST(MegoTest, ZeroAlphaChannelGetsNoFilters) {
  const auto d = mego(sparse_toy(), AlphaVector{1.0, 0.0, 1.0}, 100);
  EXPECT_EQ(d.g, (ChannelDistribution{2, 0, 1}));
  EXPECT_EQ(d.achieved_error_sq, 0.0);
}

TEST(MegoTest, TiesGoToLowestChannel) {
  Matrix w = Matrix::Zero(1, 2);
  w << 1.0, -1.0;
  const auto d = mego(WeightMatrix(make_spec(2, 1, 1), w), alpha_uniform(2), 1);
  EXPECT_EQ(d.g, (ChannelDistribution{1, 0}));
}

TEST(MegoTest, MatchesExhaustiveSearch) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int c = 1 + trial % 3;
    const int m = 2 + trial % 3;
    const WeightMatrix w = random_instance(rng, c, 2, m);
    const AlphaVector alpha = random_alpha(rng, c);
    const double energy = w.data().squaredNorm() * 4.0;
    const auto energies = channel_energies(w.data(), c, 4);
    std::int64_t max_total = 0;
    for (const auto& e : energies) max_total += static_cast<std::int64_t>(e.size());
    for (std::int64_t gamma = 1; gamma <= max_total; ++gamma) {
      const auto d = mego(w, alpha, gamma);
      EXPECT_LE(d.total_filters(), gamma);
      EXPECT_LE(energy_rel_diff(d.achieved_error_sq, brute_min_error(energies, alpha, gamma),
                                energy),
                1e-9)
          << "trial " << trial << " gamma " << gamma;
    }
  }
}

TEST(MegoTest, ErrorIsNonIncreasingInBudget) {
  Rng rng(12);
  const WeightMatrix w = random_instance(rng, 3, 3, 5);
  const AlphaVector alpha = random_alpha(rng, 3);
  double last = std::numeric_limits<double>::infinity();
  for (std::int64_t gamma = 1; gamma <= 16; ++gamma) {
    const double e = mego(w, alpha, gamma).achieved_error_sq;
    EXPECT_LE(e, last);
    last = e;
  }
  EXPECT_LE(last, 1e-20 * w.data().squaredNorm());
}

TEST(MegoTest, InvariantToAlphaScaling) {
  Rng rng(13);
  const WeightMatrix w = random_instance(rng, 4, 2, 4);
  const AlphaVector alpha = random_alpha(rng, 4);
  AlphaVector scaled = alpha;
  for (double& a : scaled) a *= 7.5;
  for (std::int64_t gamma = 1; gamma <= 12; ++gamma) {
    EXPECT_EQ(mego(w, alpha, gamma).g, mego(w, scaled, gamma).g);
  }
}

TEST(MegoTest, PredictedErrorMatchesMeasuredError) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightMatrix w = random_instance(rng, 3, 3, 6);
    const AlphaVector alpha = random_alpha(rng, 3);
    const auto d = mego(w, alpha, 1 + trial % 15, {.materialize = true});
    ASSERT_TRUE(d.approx_matrix.has_value());
    const WeightMatrix q(w.spec(), *d.approx_matrix);
    EXPECT_LE(energy_rel_diff(weighted_error_sq(w, q, alpha), d.achieved_error_sq,
                              4.0 * w.data().squaredNorm()),
              1e-9);
  }
}

TEST(MegoTest, ThreadCountDoesNotChangeResult) {
  Rng rng(15);
  const WeightMatrix w = random_instance(rng, 6, 3, 8);
  const AlphaVector alpha = random_alpha(rng, 6);
  const auto a = mego(w, alpha, 17, {.threads = 1});
  const auto b = mego(w, alpha, 17, {.threads = 4});
  EXPECT_EQ(a.g, b.g);
  EXPECT_EQ(a.factors.pw, b.factors.pw);
  EXPECT_EQ(a.factors.gdw, b.factors.gdw);
}

TEST(MegoTest, RejectsBadArguments) {
  const WeightMatrix w = sparse_toy();
  EXPECT_THROW(mego(w, alpha_uniform(3), 0), ValidationError);
  EXPECT_THROW(mego(w, alpha_uniform(2), 4), ValidationError);
  EXPECT_THROW(mego(w, AlphaVector{1.0, -1.0, 1.0}, 4), ValidationError);
  EXPECT_THROW(mego(w, AlphaVector{1.0, std::nan(""), 1.0}, 4), ValidationError);
}

TEST(LegoTest, SparseToyZeroBudgetIsExact) {
  const auto d = lego(sparse_toy(), alpha_uniform(3), 0.0);
  EXPECT_EQ(d.g, (ChannelDistribution{2, 1, 1}));
  EXPECT_EQ(d.total_filters(), 4);
  EXPECT_EQ(d.achieved_error_sq, 0.0);
  // No distribution with three filters reproduces the layer.
  const auto energies = channel_energies(sparse_toy().data(), 3, 4);
  EXPECT_EQ(brute_min_total(energies, alpha_uniform(3), 0.0), 4);
}

TEST(LegoTest, SparseToyBudgetSteps) {
  // Sorted energies 1, 4, 9, 25.
  EXPECT_EQ(lego(sparse_toy(), alpha_uniform(3), 0.99).g, (ChannelDistribution{2, 1, 1}));
  EXPECT_EQ(lego(sparse_toy(), alpha_uniform(3), 1.0).g, (ChannelDistribution{2, 1, 0}));
  EXPECT_EQ(lego(sparse_toy(), alpha_uniform(3), 4.99).g, (ChannelDistribution{2, 1, 0}));
  EXPECT_EQ(lego(sparse_toy(), alpha_uniform(3), 5.0).g, (ChannelDistribution{1, 1, 0}));
}

TEST(LegoTest, LargeBudgetDropsEverything) {
  const auto d = lego(sparse_toy(), alpha_uniform(3), 1e9);
  EXPECT_EQ(d.g, (ChannelDistribution{0, 0, 0}));
  EXPECT_EQ(d.factors.pw.cols(), 0);
  EXPECT_EQ(d.factors.gdw.rows(), 0);
  EXPECT_NEAR(d.achieved_error_sq, 39.0, 1e-12);
  EXPECT_EQ(composed(d).data(), Matrix::Zero(4, 12));
}

TEST(LegoTest, ZeroAlphaChannelIsDropped) {
  const auto d = lego(sparse_toy(), AlphaVector{1.0, 0.0, 1.0}, 0.0);
  EXPECT_EQ(d.g, (ChannelDistribution{2, 0, 1}));
  EXPECT_EQ(d.achieved_error_sq, 0.0);
}

TEST(LegoTest, MatchesExhaustiveSearch) {
  Rng rng(21);
  const double fractions[] = {0.0, 0.003, 0.017, 0.05, 0.11, 0.23, 0.41, 0.62, 0.87, 1.05};
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 1 + trial % 3;
    const WeightMatrix w = random_instance(rng, c, 2, 2 + trial % 3);
    const AlphaVector alpha = random_alpha(rng, c);
    const auto energies = channel_energies(w.data(), c, 4);
    const std::vector<int> none(energies.size(), 0);
    const double total = brute_error(energies, alpha, none);
    for (double f : fractions) {
      const double beta = f * total;
      const auto d = lego(w, alpha, beta);
      EXPECT_LE(d.achieved_error_sq, beta * (1.0 + 1e-12) + 1e-300);
      EXPECT_EQ(d.total_filters(), brute_min_total(energies, alpha, beta))
          << "trial " << trial << " fraction " << f;
    }
  }
}

TEST(LegoTest, DualOfMego) {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightMatrix w = random_instance(rng, 3, 3, 5);
    const AlphaVector alpha = random_alpha(rng, 3);
    const double beta = (0.05 + 0.5 * rng.uniform()) * w.data().squaredNorm();
    const auto l = lego(w, alpha, beta);
    if (l.total_filters() == 0) continue;
    EXPECT_LE(mego(w, alpha, l.total_filters()).achieved_error_sq, beta * (1.0 + 1e-12));
    if (l.total_filters() > 1) {
      EXPECT_GT(mego(w, alpha, l.total_filters() - 1).achieved_error_sq, beta);
    }
  }
}

TEST(LegoTest, RejectsNegativeBudget) {
  EXPECT_THROW(lego(sparse_toy(), alpha_uniform(3), -1.0), ValidationError);
  EXPECT_THROW(lego(sparse_toy(), alpha_uniform(3), std::nan("")), ValidationError);
}

TEST(DecomposeTest, SparseToyFactorsAreSparse) {
  const WeightMatrix w = sparse_toy();
  const auto svds = svd_channels(w);
  const std::vector<int> g{2, 1, 1};
  const GdwsFactors f = decompose(w, g, svds);
  ASSERT_EQ(f.pw.cols(), 4);
  ASSERT_EQ(f.gdw.rows(), 4);
  EXPECT_EQ(count_nonzeros(f.pw), 4);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(count_nonzeros(f.pw.col(j)), 1);
  for (Eigen::Index j = 0; j < 4; ++j) {
    EXPECT_EQ(count_nonzeros(f.gdw.row(j)), 1);
    EXPECT_DOUBLE_EQ(f.gdw.row(j).cwiseAbs().sum(), 1.0);
    EXPECT_EQ(f.gdw.row(j).maxCoeff(), 1.0);
  }
  EXPECT_EQ(compose(f.pw, f.gdw, w.spec(), g).data(), w.data());
}

TEST(DecomposeTest, RejectsRankAboveBudget) {
  const WeightMatrix w = sparse_toy();
  const auto svds = svd_channels(w);
  const std::vector<int> g{1, 1, 1};
  EXPECT_THROW(decompose(w, g, svds), ValidationError);
}

TEST(DecomposeTest, ZeroDistributionGivesEmptyFactors) {
  const WeightMatrix w(make_spec(3, 2, 4));
  const std::vector<int> g{0, 0, 0};
  const GdwsFactors f = decompose(w, g, svd_channels(w));
  EXPECT_EQ(f.pw.rows(), 4);
  EXPECT_EQ(f.pw.cols(), 0);
  EXPECT_EQ(f.gdw.rows(), 0);
  EXPECT_EQ(f.gdw.cols(), 12);
}

TEST(DecomposeTest, RoundTripsTruncatedMatrices) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightMatrix w = random_instance(rng, 3, 3, 7);
    const auto d = mego(w, alpha_uniform(3), 1 + trial % 12, {.materialize = true});
    const WeightMatrix w_hat(w.spec(), *d.approx_matrix);
    const auto svds = svd_channels(w_hat);
    const GdwsFactors f = decompose(w_hat, d.g, svds);
    EXPECT_LE((compose(f.pw, f.gdw, w.spec(), d.g).data() - w_hat.data()).norm(),
              1e-10 * w.data().norm());
  }
}

TEST(ComposeTest, IdentityPointwiseReturnsDepthwiseRows) {
  const auto spec = make_spec(2, 2, 3);
  Matrix gdw = Matrix::Zero(3, 8);
  gdw.row(0).segment(0, 4) << 1, 2, 3, 4;
  gdw.row(1).segment(0, 4) << 5, 6, 7, 8;
  gdw.row(2).segment(4, 4) << -1, -2, -3, -4;
  const std::vector<int> g{2, 1};
  EXPECT_EQ(compose(Matrix::Identity(3, 3), gdw, spec, g).data(), gdw);
}

TEST(ComposeTest, MatchesNaiveProduct) {
  Rng rng(32);
  const auto spec = make_spec(3, 3, 5);
  const std::vector<int> g{2, 0, 3};
  Matrix gdw = Matrix::Zero(5, 27);
  gdw.block(0, 0, 2, 9) = random_matrix(rng, 2, 9);
  gdw.block(2, 18, 3, 9) = random_matrix(rng, 3, 9);
  const Matrix pw = random_matrix(rng, 5, 5);
  EXPECT_LE((compose(pw, gdw, spec, g).data() - testing::naive_matmul(pw, gdw))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(ComposeTest, RejectsStructureViolations) {
  const auto spec = make_spec(2, 2, 2);
  Matrix gdw = Matrix::Zero(2, 8);
  gdw(0, 0) = 1.0;
  gdw(1, 4) = 1.0;
  const std::vector<int> g{1, 1};
  EXPECT_NO_THROW(compose(Matrix::Identity(2, 2), gdw, spec, g));
  gdw(0, 5) = 0.5;
  EXPECT_THROW(compose(Matrix::Identity(2, 2), gdw, spec, g), ValidationError);
  EXPECT_THROW(compose(Matrix::Identity(2, 2), gdw, spec), ValidationError);
  Matrix swapped = Matrix::Zero(2, 8);
  swapped(0, 4) = 1.0;
  swapped(1, 0) = 1.0;
  EXPECT_THROW(compose(Matrix::Identity(2, 2), swapped, spec), ValidationError);
  EXPECT_THROW(compose(Matrix::Identity(3, 3), gdw, spec, g), ShapeError);
}

TEST(FactorStructureTest, RowsAreUnitAndBlockLocal) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const WeightMatrix w = random_instance(rng, 4, 3, 6);
    const auto d = mego(w, random_alpha(rng, 4), 3 + 2 * trial);
    EXPECT_NO_THROW(check_block_structure(d.factors.gdw, w.spec(), d.g));
    for (Eigen::Index j = 0; j < d.factors.gdw.rows(); ++j) {
      EXPECT_NEAR(d.factors.gdw.row(j).norm(), 1.0, 1e-12);
    }
    // A channel with g_c filters contributes a block of rank at most g_c.
    const WeightMatrix q = composed(d);
    for (int c = 0; c < 4; ++c) EXPECT_LE(rank_of(q.channel(c)), d.g[c]);
  }
}

TEST(ExactGdwsTest, SparseToy) {
  const WeightMatrix w = sparse_toy();
  const auto d = exact_gdws(w, {.materialize = true});
  EXPECT_EQ(d.g, (ChannelDistribution{2, 1, 1}));
  EXPECT_EQ(d.ranks, (std::vector<int>{2, 1, 1}));
  EXPECT_EQ(d.achieved_error_sq, 0.0);
  EXPECT_EQ(*d.approx_matrix, w.data());
  EXPECT_EQ(count_nonzeros(d.factors.pw) + count_nonzeros(d.factors.gdw), 8);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(d.factors.gdw.row(j).maxCoeff(), 1.0);
}

TEST(ExactGdwsTest, ZeroLayerHasNoFilters) {
  const auto d = exact_gdws(WeightMatrix(make_spec(3, 3, 4)));
  EXPECT_EQ(d.g, (ChannelDistribution{0, 0, 0}));
  EXPECT_EQ(d.total_filters(), 0);
}

TEST(ExactGdwsTest, DenseLayerNeedsFullRankAndPreservesOutputs) {
  Rng rng(51);
  const auto spec = make_spec(2, 3, 16, 1, 1);
  const WeightMatrix w(spec, random_matrix(rng, 16, 18));
  const auto d = exact_gdws(w);
  EXPECT_EQ(d.g, (ChannelDistribution{9, 9}));
  const FeatureMap x = testing::random_map(rng, 2, 7, 7);
  const FeatureMap a = testing::naive_conv(w.data(), spec, x);
  const FeatureMap b = testing::naive_conv(composed(d).data(), spec, x);
  EXPECT_LE(testing::max_abs_diff(a, b), 1e-9);
}

TEST(ExactGdwsTest, SparseFactorsStayAsSparseAsTheLayer) {
  Rng rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightMatrix w(make_spec(8, 3, 16), testing::random_sparse(rng, 16, 72, 0.05));
    const auto d = exact_gdws(w);
    EXPECT_NO_THROW(check_block_structure(d.factors.gdw, w.spec(), d.g));
    EXPECT_LE((composed(d).data() - w.data()).squaredNorm(), 1e-12 * w.data().squaredNorm());
    EXPECT_LE(count_nonzeros(d.factors.pw), count_nonzeros(w.data()));
    EXPECT_LE(count_nonzeros(d.factors.gdw), count_nonzeros(w.data()));
    for (Eigen::Index j = 0; j < d.factors.gdw.rows(); ++j) {
      EXPECT_NEAR(d.factors.gdw.row(j).norm(), 1.0, 1e-12);
    }
  }
}

TEST(ChannelOffsetsTest, PrefixSums) {
  const std::vector<int> g{2, 0, 3};
  EXPECT_EQ(channel_offsets(g), (std::vector<std::int64_t>{0, 2, 2, 5}));
  const std::vector<int> bad{1, -1};
  EXPECT_THROW(channel_offsets(bad), ValidationError);
}

}  // namespace
}  // namespace gdws
