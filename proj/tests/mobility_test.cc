//
// Copyright 2026 The GeoPerturb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "geoperturb/mobility.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "absl/status/status.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace geoperturb {
namespace {

using ::geoperturb::testing::Grid;
using ::geoperturb::testing::RandomSimplex;
using ::geoperturb::testing::RandomTransitions;
using ::testing::DoubleNear;
using ::testing::ElementsAre;
using ::testing::Pointwise;

CountMatrix Counts(int n, std::vector<std::int64_t> values) {
  CountMatrix c(n);
  c.counts = std::move(values);
  return c;
}

TEST(CheckSimplexTest, AcceptsAndRejects) {
  EXPECT_TRUE(CheckSimplex(std::vector<double>{0.25, 0.75}).ok());
  EXPECT_FALSE(CheckSimplex(std::vector<double>{0.5, 0.6}).ok());
  EXPECT_FALSE(CheckSimplex(std::vector<double>{1.5, -0.5}).ok());
  EXPECT_FALSE(CheckSimplex(std::vector<double>{}).ok());
}

TEST(EstimateTransitionMatrixTest, Examples) {
  absl::StatusOr<TransitionMatrix> m =
      EstimateTransitionMatrix(Counts(2, {1, 1, 0, 2}), Reachability(2));
  GP_ASSERT_OK(m);
  EXPECT_THAT(testing::Vec(m->row(0)), ElementsAre(0.5, 0.5));
  EXPECT_THAT(testing::Vec(m->row(1)), ElementsAre(0.0, 1.0));
}

TEST(EstimateTransitionMatrixTest, ZeroRowBecomesSelfLoop) {
  absl::StatusOr<TransitionMatrix> m = EstimateTransitionMatrix(
      Counts(3, {1, 2, 1, 0, 0, 0, 3, 0, 1}), Reachability(3));
  GP_ASSERT_OK(m);
  EXPECT_THAT(testing::Vec(m->row(1)), ElementsAre(0.0, 1.0, 0.0));
  EXPECT_THAT(testing::Vec(m->row(0)), ElementsAre(0.25, 0.5, 0.25));
}

TEST(EstimateTransitionMatrixTest, RejectsNegativeAndUnreachableCounts) {
  EXPECT_EQ(EstimateTransitionMatrix(Counts(2, {1, -1, 0, 1}), Reachability(2))
                .status()
                .code(),
            absl::StatusCode::kInvalidArgument);
  Reachability r(2);
  r.set(0, 1, false);
  EXPECT_FALSE(EstimateTransitionMatrix(Counts(2, {1, 1, 0, 1}), r).ok());
  absl::StatusOr<TransitionMatrix> ok =
      EstimateTransitionMatrix(Counts(2, {1, 0, 0, 1}), r);
  GP_ASSERT_OK(ok);
  EXPECT_EQ(ok->at(0, 1), 0.0);
}

TEST(TransitionMatrixTest, FromDenseValidates) {
  EXPECT_FALSE(TransitionMatrix::FromDense(2, {0.5, 0.5, 0.5}).ok());
  EXPECT_FALSE(TransitionMatrix::FromDense(2, {0.5, 0.6, 0.0, 1.0}).ok());
  EXPECT_FALSE(TransitionMatrix::FromDense(2, {1.5, -0.5, 0.0, 1.0}).ok());
  EXPECT_TRUE(TransitionMatrix::FromDense(2, {0.5, 0.5, 0.0, 1.0}).ok());
}

TEST(ReadCountsCsvTest, ParsesTriplesSkippingHeaderAndBlanks) {
  std::istringstream in("row,col,count\n0,1,3\n\n1,1,2\n0,0,1\n");
  absl::StatusOr<CountMatrix> c = ReadCountsCsv(in, 2);
  GP_ASSERT_OK(c);
  EXPECT_THAT(c->counts, ElementsAre(1, 3, 0, 2));
}

TEST(ReadCountsCsvTest, RejectsMalformedInput) {
  std::istringstream bad_index("0,5,1\n");
  EXPECT_FALSE(ReadCountsCsv(bad_index, 2).ok());
  std::istringstream bad_count("0,1,-4\n");
  EXPECT_FALSE(ReadCountsCsv(bad_count, 2).ok());
  std::istringstream garbage("row,col,count\n0,1,1\n0,1\n");
  EXPECT_FALSE(ReadCountsCsv(garbage, 2).ok());
}

TEST(AdvancePriorTest, Examples) {
  absl::StatusOr<TransitionMatrix> m =
      TransitionMatrix::FromDense(2, {0.5, 0.5, 0.0, 1.0});
  GP_ASSERT_OK(m);
  absl::StatusOr<std::vector<double>> p =
      AdvancePrior(std::vector<double>{0.5, 0.5}, *m);
  GP_ASSERT_OK(p);
  EXPECT_THAT(*p, Pointwise(DoubleNear(1e-15), {0.25, 0.75}));

  std::vector<double> post = {0.2, 0.3, 0.5};
  absl::StatusOr<std::vector<double>> same =
      AdvancePrior(post, testing::Identity(3));
  GP_ASSERT_OK(same);
  EXPECT_THAT(*same, Pointwise(DoubleNear(1e-15), post));
}

TEST(AdvancePriorTest, PointMassYieldsRow) {
  std::mt19937_64 rng(3);
  TransitionMatrix m = RandomTransitions(5, rng);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> point(5, 0.0);
    point[i] = 1.0;
    absl::StatusOr<std::vector<double>> p = AdvancePrior(point, m);
    GP_ASSERT_OK(p);
    EXPECT_THAT(*p, Pointwise(DoubleNear(1e-15), testing::Vec(m.row(i))));
  }
}

TEST(AdvancePriorTest, RejectsDimensionMismatch) {
  EXPECT_EQ(AdvancePrior(std::vector<double>{1.0}, testing::Identity(2))
                .status()
                .code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(AdvancePriorTest, PreservesSimplexOnRandomInputs) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 15;
    TransitionMatrix m = RandomTransitions(n, rng);
    std::vector<double> p = RandomSimplex(n, rng, 0.3);
    absl::StatusOr<std::vector<double>> next = AdvancePrior(p, m);
    GP_ASSERT_OK(next);
    GP_EXPECT_OK(CheckSimplex(*next));
  }
}

TEST(AdvancePriorTest, IdentityChainKeepsPriorConstant) {
  std::mt19937_64 rng(5);
  std::vector<double> p = RandomSimplex(6, rng);
  std::vector<double> cur = p;
  for (int t = 0; t < 10; ++t) cur = *AdvancePrior(cur, testing::Identity(6));
  EXPECT_THAT(cur, Pointwise(DoubleNear(1e-15), p));
}

TEST(BayesPosteriorTest, Examples) {
  absl::StatusOr<std::vector<double>> p = BayesPosterior(
      std::vector<double>{0.5, 0.5}, std::vector<double>{0.8, 0.4});
  GP_ASSERT_OK(p);
  EXPECT_THAT(*p, Pointwise(DoubleNear(1e-15), {2.0 / 3, 1.0 / 3}));

  std::vector<double> prior = {0.1, 0.6, 0.3};
  EXPECT_THAT(*BayesPosterior(prior, std::vector<double>{0.2, 0.2, 0.2}),
              Pointwise(DoubleNear(1e-15), prior));
  EXPECT_THAT(*BayesPosterior(std::vector<double>{0, 1, 0},
                              std::vector<double>{0.3, 0.1, 0.9}),
              ElementsAre(0.0, 1.0, 0.0));
}

TEST(BayesPosteriorTest, ImpossibleObservationIsFailedPrecondition) {
  EXPECT_EQ(BayesPosterior(std::vector<double>{1.0, 0.0},
                           std::vector<double>{0.0, 1.0})
                .status()
                .code(),
            absl::StatusCode::kFailedPrecondition);
}

// Posterior after two observations equals normalizing the joint table
// Pr(x0) Pr(x1 | x0) f(o0 | x0) f(o1 | x1) summed over x0.
TEST(BayesPosteriorTest, MatchesJointTableOnRandomChains) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 15;
    TransitionMatrix m = RandomTransitions(n, rng);
    std::vector<double> p0 = RandomSimplex(n, rng);
    std::vector<double> f0 = RandomSimplex(n, rng);
    std::vector<double> f1 = RandomSimplex(n, rng);

    std::vector<double> joint(n, 0.0);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) joint[b] += p0[a] * f0[a] * m.at(a, b) * f1[b];
    }
    double z = 0.0;
    for (double v : joint) z += v;
    for (double& v : joint) v /= z;

    std::vector<double> post0 = *BayesPosterior(p0, f0);
    std::vector<double> prior1 = *AdvancePrior(post0, m);
    std::vector<double> post1 = *BayesPosterior(prior1, f1);
    EXPECT_THAT(post1, Pointwise(DoubleNear(1e-12), joint));
  }
}

TEST(DeltaLocationSetTest, Examples) {
  LocationGrid g = Grid({2, 2, 2}, {2, 2, 2});
  std::vector<double> prior = {0.5, 0.3, 0.2, 0, 0, 0, 0, 0};
  absl::StatusOr<PossibleLocationSet> s = DeltaLocationSet(prior, 0.25, 0, g);
  GP_ASSERT_OK(s);
  EXPECT_THAT(s->members, ElementsAre(0, 1));
  EXPECT_NEAR(s->mass, 0.8, 1e-15);
  EXPECT_FALSE(s->surrogate.has_value());

  std::vector<double> uniform4 = {0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0};
  s = DeltaLocationSet(uniform4, 1e-9, 0, g);
  GP_ASSERT_OK(s);
  EXPECT_THAT(s->members, ElementsAre(0, 1, 2, 3));

  std::vector<double> point = {0, 0, 0, 1, 0, 0, 0, 0};
  s = DeltaLocationSet(point, 0.5, 3, g);
  GP_ASSERT_OK(s);
  EXPECT_THAT(s->members, ElementsAre(3));
  EXPECT_FALSE(s->surrogate.has_value());
  EXPECT_EQ(s->anchor(3), 3);
}

TEST(DeltaLocationSetTest, SurrogateIsNearestMember) {
  LocationGrid g = Grid({4, 2, 2}, {4, 2, 2});
  std::vector<double> prior(g.size(), 0.0);
  const int far = g.IndexOf({3, 0, 0});
  const int near = g.IndexOf({1, 0, 0});
  prior[g.IndexOf({0, 0, 0})] = 0.5;
  prior[near] = 0.45;
  prior[far] = 0.05;
  absl::StatusOr<PossibleLocationSet> s =
      DeltaLocationSet(prior, 0.1, far, g);
  GP_ASSERT_OK(s);
  EXPECT_FALSE(s->contains(far));
  ASSERT_TRUE(s->surrogate.has_value());
  EXPECT_EQ(*s->surrogate, near);
  EXPECT_EQ(s->anchor(far), near);
}

TEST(DeltaLocationSetTest, TiesResolvedByIndex) {
  LocationGrid g = Grid({2, 2, 2}, {2, 2, 2});
  std::vector<double> prior(8, 0.125);
  absl::StatusOr<PossibleLocationSet> s = DeltaLocationSet(prior, 0.5, 0, g);
  GP_ASSERT_OK(s);
  EXPECT_THAT(s->members, ElementsAre(0, 1, 2, 3));
}

TEST(DeltaLocationSetTest, RejectsBadInputs) {
  LocationGrid g = Grid({2, 2, 2}, {2, 2, 2});
  std::vector<double> prior(8, 0.125);
  EXPECT_FALSE(DeltaLocationSet(prior, 0.0, 0, g).ok());
  EXPECT_FALSE(DeltaLocationSet(prior, 1.0, 0, g).ok());
  std::vector<double> bad(8, 0.2);
  EXPECT_FALSE(DeltaLocationSet(bad, 0.3, 0, g).ok());
}

// Brute force: the smallest cardinality reaching 1 - delta over all subsets.
TEST(DeltaLocationSetTest, MinimalCardinalityAndThresholdOnRandomPriors) {
  LocationGrid g = Grid({2, 2, 4}, {2, 2, 4});
  const int n = g.size();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> prior = RandomSimplex(n, rng, 0.4);
    const double delta = unit(rng);
    absl::StatusOr<PossibleLocationSet> s = DeltaLocationSet(prior, delta, 0, g);
    GP_ASSERT_OK(s);
    int best = n + 1;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      double mass = 0.0;
      for (int i = 0; i < n; ++i) {
        if (mask & (1u << i)) mass += prior[i];
      }
      if (mass >= 1.0 - delta - 1e-12) {
        best = std::min(best, __builtin_popcount(mask));
      }
    }
    EXPECT_EQ(static_cast<int>(s->members.size()), best);
    EXPECT_GE(s->mass, 1.0 - delta - 1e-12);
    double min_prior = 1.0;
    for (int m : s->members) min_prior = std::min(min_prior, prior[m]);
    EXPECT_LT(s->mass - min_prior, 1.0 - delta);
  }
}

TEST(InferLocationTest, PointMassIsRecoveredEverywhere) {
  LocationGrid g = Grid({4, 4, 4}, {4, 4, 4});
  for (int k = 0; k < g.size(); ++k) {
    std::vector<double> post(g.size(), 0.0);
    post[k] = 1.0;
    Inference inf = InferLocation(post, g);
    EXPECT_EQ(inf.cell, k);
    EXPECT_EQ(inf.expected_error, 0.0);
  }
}

TEST(InferLocationTest, MatchesEnumerationOnRandomPosteriors) {
  LocationGrid g = Grid({4, 2, 2}, {3, 1, 5});
  std::mt19937_64 rng(29);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> post = RandomSimplex(g.size(), rng, 0.5);
    for (Metric metric : {Metric::k3D, Metric::k2D}) {
      int best = -1;
      double best_e = 0.0;
      for (int c = 0; c < g.size(); ++c) {
        double e = 0.0;
        for (int x = 0; x < g.size(); ++x) {
          e += post[x] * g.distance(metric, c, x);
        }
        if (best < 0 || e < best_e - 1e-12) {
          best = c;
          best_e = e;
        }
      }
      Inference inf = InferLocation(post, g, metric);
      EXPECT_NEAR(inf.expected_error, best_e, 1e-12);
      EXPECT_EQ(OptimalInference(post, g, metric), inf.cell);
    }
  }
}

TEST(InferLocationTest, HeavyDistantCellWins) {
  LocationGrid g = Grid({16, 2, 2}, {16, 2, 2});
  std::vector<double> post(g.size(), 0.0);
  post[g.IndexOf({0, 0, 0})] = 0.9;
  post[g.IndexOf({10, 0, 0})] = 0.1;
  EXPECT_EQ(OptimalInference(post, g), g.IndexOf({0, 0, 0}));
  EXPECT_NEAR(InferLocation(post, g).expected_error, 1.0, 1e-12);
}

TEST(NearestMemberTest, TiesGoToLowestIndex) {
  LocationGrid g = Grid({4, 2, 2}, {4, 2, 2});
  const int left = g.IndexOf({0, 0, 0});
  const int right = g.IndexOf({2, 0, 0});
  const int mid = g.IndexOf({1, 0, 0});
  std::vector<int> members = {right, left};
  EXPECT_EQ(NearestMember(members, mid, g, Metric::k3D), left);
}

}  // namespace
}  // namespace geoperturb
