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

#include "geoperturb/mechanism.h"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace geoperturb {
namespace {

using ::geoperturb::testing::Grid;
using ::testing::DoubleNear;
using ::testing::ElementsAre;
using ::testing::Pointwise;

PerturbationChannel Channel(std::vector<double> distances, double sensitivity,
                            double epsilon) {
  std::vector<int> cells(distances.size());
  std::iota(cells.begin(), cells.end(), 1);
  absl::StatusOr<PerturbationChannel> ch = PerturbationChannel::FromDistances(
      0, std::move(cells), std::move(distances), sensitivity, epsilon);
  EXPECT_TRUE(ch.ok()) << ch.status();
  return *std::move(ch);
}

// Enumerates every ordering and every accept/reject pattern of the scan.
std::vector<double> BruteForcePf(const std::vector<double>& distances,
                                 double sensitivity, double epsilon) {
  const int n = static_cast<int>(distances.size());
  const double d_min = *std::min_element(distances.begin(), distances.end());
  std::vector<double> accept(n);
  for (int k = 0; k < n; ++k) {
    accept[k] = std::exp(-epsilon * (distances[k] - d_min) / (2 * sensitivity));
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> pmf(n, 0.0);
  double count = 0.0;
  do {
    count += 1.0;
    for (std::uint32_t pattern = 0; pattern < (1u << n); ++pattern) {
      double prob = 1.0;
      int chosen = -1;
      for (int pos = 0; pos < n; ++pos) {
        const bool heads = pattern & (1u << pos);
        const double a = accept[order[pos]];
        prob *= heads ? a : 1.0 - a;
        if (heads) {
          chosen = order[pos];
          break;
        }
      }
      if (chosen < 0 || pattern >> (std::countr_zero(pattern) + 1) != 0) {
        continue;
      }
      pmf[chosen] += prob;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& p : pmf) p /= count;
  return pmf;
}

double ChiSquarePValue(const std::vector<int>& observed,
                       const std::vector<double>& pmf, int draws) {
  double stat = 0.0;
  int bins = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const double expected = pmf[k] * draws;
    if (expected <= 0.0) continue;
    stat += (observed[k] - expected) * (observed[k] - expected) / expected;
    ++bins;
  }
  return gsl_cdf_chisq_Q(stat, bins - 1);
}

TEST(PerturbationChannelTest, Construction) {
  LocationGrid g = Grid({4, 2, 2}, {4, 2, 2});
  const int a = g.IndexOf({0, 0, 0});
  std::vector<int> cands = {g.IndexOf({2, 0, 0}), g.IndexOf({1, 0, 0})};
  absl::StatusOr<PerturbationChannel> ch =
      PerturbationChannel::Create(a, cands, g, 2.0, 2.0);
  GP_ASSERT_OK(ch);
  EXPECT_THAT(ch->distances(), ElementsAre(2.0, 1.0));
  EXPECT_EQ(ch->u_star(), -1.0);
  EXPECT_EQ(ch->utility(0), -2.0);
  EXPECT_THAT(ch->acceptance(),
              Pointwise(DoubleNear(1e-15), {std::exp(-0.5), 1.0}));
}

TEST(PerturbationChannelTest, RejectsInvalidChannels) {
  LocationGrid g = Grid({2, 2, 2}, {2, 2, 2});
  EXPECT_FALSE(PerturbationChannel::Create(0, {}, g, 1.0, 1.0).ok());
  EXPECT_FALSE(PerturbationChannel::Create(0, {0, 1}, g, 1.0, 1.0).ok());
  EXPECT_FALSE(PerturbationChannel::Create(0, {1, 1}, g, 1.0, 1.0).ok());
  EXPECT_FALSE(PerturbationChannel::Create(0, {1, 9}, g, 1.0, 1.0).ok());
  EXPECT_FALSE(PerturbationChannel::Create(0, {1}, g, 0.0, 1.0).ok());
  EXPECT_FALSE(PerturbationChannel::Create(0, {1}, g, 1.0, -1.0).ok());
  EXPECT_FALSE(
      PerturbationChannel::FromDistances(0, {1, 2}, {1.0}, 1.0, 1.0).ok());
}

TEST(PfExactPmfTest, TwoCandidateExample) {
  PerturbationChannel ch = Channel({1.0, 2.0}, 2.0, 2.0);
  absl::StatusOr<std::vector<double>> pmf = PfExactPmf(ch);
  GP_ASSERT_OK(pmf);
  EXPECT_NEAR((*pmf)[1], std::exp(-0.5) / 2, 1e-15);
  EXPECT_THAT(*pmf, Pointwise(DoubleNear(5e-5), {0.6967, 0.3033}));
  EXPECT_THAT(PfPmf(ch), Pointwise(DoubleNear(1e-14), *pmf));
}

TEST(PfExactPmfTest, EqualUtilitiesAndZeroEpsilonAreUniform) {
  EXPECT_THAT(*PfExactPmf(Channel({3.0, 3.0}, 1.0, 5.0)),
              Pointwise(DoubleNear(1e-15), {0.5, 0.5}));
  EXPECT_THAT(*PfExactPmf(Channel({1.0, 2.0, 7.0}, 1.0, 0.0)),
              Pointwise(DoubleNear(1e-15), {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  EXPECT_THAT(PfPmf(Channel({1.0, 2.0, 7.0, 4.0}, 1.0, 0.0)),
              Pointwise(DoubleNear(1e-14), {0.25, 0.25, 0.25, 0.25}));
}

TEST(PfExactPmfTest, RefusesTooManyCandidates) {
  EXPECT_EQ(PfExactPmf(Channel(std::vector<double>(9, 1.0), 1.0, 1.0))
                .status()
                .code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(PfPmfTest, AgreesWithEnumerationOnRandomChannels) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.5, 8.0);
  std::uniform_real_distribution<double> eps(0.01, 6.0);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + k % kMaxEnumerableCandidates;
    std::vector<double> d(n);
    for (double& v : d) v = dist(rng);
    const double sens = dist(rng), e = eps(rng);
    PerturbationChannel ch = Channel(d, sens, e);
    std::vector<double> exact = *PfExactPmf(ch);
    EXPECT_THAT(PfPmf(ch), Pointwise(DoubleNear(1e-12), exact));
    if (n <= 5) {
      EXPECT_THAT(exact, Pointwise(DoubleNear(1e-12), BruteForcePf(d, sens, e)));
    }
  }
}

TEST(PfPmfTest, LargeChannelsAreDistributionsMonotoneInDistance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 15.0);
  for (int n : {9, 20, 50, 200}) {
    std::vector<double> d(n);
    for (double& v : d) v = dist(rng);
    PerturbationChannel ch = Channel(d, 4.0, 1.5);
    std::vector<double> pmf = PfPmf(ch);
    EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-12);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (d[i] < d[j]) ASSERT_GE(pmf[i], pmf[j] - 1e-15);
      }
    }
  }
}

TEST(PfSampleTest, SingleCandidateAlwaysReturned) {
  PerturbationChannel ch = Channel({4.0}, 1.0, 1.0);
  Rng rng(1);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(PfSample(ch, rng), 1);
  EXPECT_THAT(PfPmf(ch), ElementsAre(1.0));
}

struct SamplerCase {
  std::vector<double> distances;
  double sensitivity;
  double epsilon;
};

class PfSampleFidelityTest : public ::testing::TestWithParam<SamplerCase> {};

TEST_P(PfSampleFidelityTest, ChiSquareAgreesWithExactPmf) {
  const SamplerCase& c = GetParam();
  PerturbationChannel ch = Channel(c.distances, c.sensitivity, c.epsilon);
  std::vector<double> pmf = *PfExactPmf(ch);
  constexpr int kDraws = 100000;
  std::vector<int> counts(ch.size(), 0);
  Rng rng(97);
  for (int k = 0; k < kDraws; ++k) ++counts[PfSample(ch, rng) - 1];
  EXPECT_GT(ChiSquarePValue(counts, pmf, kDraws), 0.01);
}

INSTANTIATE_TEST_SUITE_P(
    Channels, PfSampleFidelityTest,
    ::testing::Values(SamplerCase{{1.0, 2.0}, 2.0, 2.0},
                      SamplerCase{{1.0, 1.5, 2.5, 4.0}, 3.0, 1.0},
                      SamplerCase{{0.5, 3.0, 3.0, 6.0, 7.5, 9.0}, 2.0, 4.0},
                      SamplerCase{{2.0, 2.1, 2.2}, 0.5, 0.001}));

TEST(PfTailBoundTest, Examples) {
  EXPECT_NEAR(PfTailBound(2.0, 1.0, 8, 4, 0.1, 0.0),
              4 * (std::log(8.0) - 0.5 - std::log(4.0) - std::log(0.1)), 1e-12);
  EXPECT_NEAR(PfTailBound(2.0, 1.0, 8, 4, 0.1, 0.0), 9.9829, 5e-5);
  EXPECT_GT(PfTailBound(2.0, 1.0, 8, 4, 0.05, 0.0),
            PfTailBound(2.0, 1.0, 8, 4, 0.5, 0.0));
  EXPECT_NEAR(PfTailBound(3.0, 2.0, 5, 5, 0.2, 0.0),
              3.0 * (-1.0 - std::log(0.2)), 1e-12);
  EXPECT_NEAR(PfTailBound(3.0, 2.0, 5, 5, 0.2, 1.5),
              3.0 * (-1.0 - std::log(0.2) - 1.5), 1e-12);
}

TEST(ExpMechPmfTest, TwoCandidateExample) {
  LocationGrid g = Grid({4, 2, 2}, {4, 2, 2});
  const int a = g.IndexOf({0, 0, 0});
  std::vector<int> cands = {g.IndexOf({1, 0, 0}), g.IndexOf({2, 0, 0})};
  absl::StatusOr<std::vector<double>> pmf = ExpMechPmf(a, cands, 2.0, 2.0, g);
  GP_ASSERT_OK(pmf);
  const double w1 = std::exp(-0.5), w2 = std::exp(-1.0);
  EXPECT_THAT(*pmf,
              Pointwise(DoubleNear(1e-15), {w1 / (w1 + w2), w2 / (w1 + w2)}));
  EXPECT_THAT(*pmf, Pointwise(DoubleNear(5e-5), {0.6225, 0.3775}));
}

TEST(ExpMechPmfTest, DegenerateCases) {
  LocationGrid g = Grid({4, 2, 2}, {4, 2, 2});
  std::vector<int> cands = {0, 3, 9, 15};
  EXPECT_THAT(*ExpMechPmf(0, cands, 0.0, 1.0, g),
              Pointwise(DoubleNear(1e-15), {0.25, 0.25, 0.25, 0.25}));
  EXPECT_THAT(*ExpMechPmf(0, std::vector<int>{9}, 3.0, 1.0, g),
              ElementsAre(1.0));
  Rng rng(4);
  EXPECT_EQ(*ExpMechSample(0, std::vector<int>{9}, 3.0, 1.0, g, rng), 9);
  EXPECT_FALSE(ExpMechPmf(0, {}, 1.0, 1.0, g).ok());
  EXPECT_FALSE(ExpMechPmf(0, cands, 1.0, 0.0, g).ok());
}

TEST(ExpMechSampleTest, ChiSquareAgreesWithPmf) {
  LocationGrid g = Grid({4, 4, 4}, {5, 5, 5});
  std::vector<int> cands = {0, 5, 17, 30, 42, 63};
  const std::vector<double> pmf = *ExpMechPmf(5, cands, 1.5, 2.0, g);
  constexpr int kDraws = 100000;
  std::map<int, int> index;
  for (std::size_t k = 0; k < cands.size(); ++k) index[cands[k]] = k;
  std::vector<int> counts(cands.size(), 0);
  Rng rng(8);
  for (int k = 0; k < kDraws; ++k) {
    ++counts[index[*ExpMechSample(5, cands, 1.5, 2.0, g, rng)]];
  }
  EXPECT_GT(ChiSquarePValue(counts, pmf, kDraws), 0.01);
}

// For two anchors inside one protection set with a shared candidate list,
// every output's probability ratio stays within exp(eps * d(x, y) / D).
TEST(PfExactPmfTest, DifferentialPrivacyRatioOnRandomGridChannels) {
  LocationGrid g = Grid({4, 4, 4}, {5, 5, 5});
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> eps(0.05, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> cells(g.size());
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    const int x = cells[0], y = cells[1];
    const int n = 1 + trial % 6;
    std::vector<int> cands(cells.begin() + 2, cells.begin() + 2 + n);
    const double diameter = std::max(g.d3(x, y), 1e-9) +
                            std::uniform_real_distribution<double>(0, 3)(rng);
    const double e = eps(rng);
    std::vector<double> fx = *PfExactPmf(
        *PerturbationChannel::Create(x, cands, g, diameter, e));
    std::vector<double> fy = *PfExactPmf(
        *PerturbationChannel::Create(y, cands, g, diameter, e));
    const double bound = std::exp(e * g.d3(x, y) / diameter);
    for (int k = 0; k < n; ++k) {
      EXPECT_LE(fx[k], fy[k] * bound * (1 + 1e-6));
      EXPECT_LE(fy[k], fx[k] * bound * (1 + 1e-6));
    }
  }
}

TEST(PfExactPmfTest, NonincreasingInDistance) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> dist(0.1, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d(1 + trial % 8);
    for (double& v : d) v = dist(rng);
    std::vector<double> pmf = *PfExactPmf(Channel(d, 2.5, 1.2));
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (d[i] <= d[j]) EXPECT_GE(pmf[i], pmf[j] - 1e-15);
      }
    }
  }
}

}  // namespace
}  // namespace geoperturb
