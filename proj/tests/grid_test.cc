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

#include "geoperturb/grid.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>
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
using ::testing::ElementsAreArray;

int L1(const LocationGrid& g, int a, int b) {
  const Lattice& p = g.lattice(a);
  const Lattice& q = g.lattice(b);
  return std::abs(p.x - q.x) + std::abs(p.y - q.y) + std::abs(p.z - q.z);
}

TEST(LocationGridTest, DefaultGridHas512CellsOfPitch125) {
  LocationGrid g = Grid({8, 8, 8}, {10, 10, 10});
  EXPECT_EQ(g.size(), 512);
  EXPECT_THAT(g.pitch(), ElementsAre(1.25, 1.25, 1.25));
}

TEST(LocationGridTest, SmallestGrid) {
  LocationGrid g = Grid({2, 2, 2}, {2, 2, 2});
  EXPECT_EQ(g.size(), 8);
  EXPECT_THAT(g.pitch(), ElementsAre(1.0, 1.0, 1.0));
}

TEST(LocationGridTest, RejectsNonPowerOfTwoDims) {
  EXPECT_EQ(LocationGrid::Create({3, 4, 4}, {1, 1, 1}).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(LocationGrid::Create({1, 4, 4}, {1, 1, 1}).ok());
}

TEST(LocationGridTest, RejectsNonPositiveExtent) {
  EXPECT_FALSE(LocationGrid::Create({2, 2, 2}, {0, 1, 1}).ok());
  EXPECT_FALSE(LocationGrid::Create({2, 2, 2}, {1, -1, 1}).ok());
}

TEST(LocationGridTest, CellOrderIsXMajor) {
  LocationGrid g = Grid({2, 4, 8}, {2, 4, 8});
  int index = 0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 4; ++y) {
      for (int z = 0; z < 8; ++z) {
        EXPECT_EQ(g.lattice(index), (Lattice{x, y, z}));
        EXPECT_EQ(g.IndexOf({x, y, z}), index);
        ++index;
      }
    }
  }
}

TEST(LocationGridTest, CentersSitMidCell) {
  LocationGrid g = Grid({8, 8, 8}, {10, 10, 10});
  const Point3& c = g.center(g.IndexOf({1, 2, 3}));
  EXPECT_DOUBLE_EQ(c.x, 1.5 * 1.25);
  EXPECT_DOUBLE_EQ(c.y, 2.5 * 1.25);
  EXPECT_DOUBLE_EQ(c.z, 3.5 * 1.25);
}

TEST(Distance3Test, Examples) {
  LocationGrid g = Grid({8, 8, 8}, {8, 8, 8});
  const int a = g.IndexOf({0, 0, 0});
  EXPECT_EQ(*g.Distance3(a, a), 0.0);
  EXPECT_DOUBLE_EQ(*g.Distance3(a, g.IndexOf({3, 4, 0})), 5.0);
  LocationGrid unit = Grid({2, 2, 2}, {2, 2, 2});
  EXPECT_DOUBLE_EQ(*unit.Distance3(0, 1), 1.0);
}

TEST(Distance3Test, RejectsOutOfRange) {
  LocationGrid g = Grid({2, 2, 2}, {2, 2, 2});
  EXPECT_EQ(g.Distance3(0, 8).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(g.Distance3(-1, 0).ok());
  EXPECT_FALSE(g.Distance2(0, 99).ok());
}

TEST(Distance2Test, Examples) {
  LocationGrid g = Grid({8, 8, 16}, {8, 8, 16});
  EXPECT_EQ(*g.Distance2(g.IndexOf({0, 0, 5}), g.IndexOf({0, 0, 9})), 0.0);
  EXPECT_DOUBLE_EQ(
      *g.Distance2(g.IndexOf({3, 4, 1}), g.IndexOf({0, 0, 7})), 5.0);
  EXPECT_EQ(*g.Distance2(3, 3), 0.0);
}

TEST(DistanceTest, MatchesCenterGeometry) {
  LocationGrid g = Grid({4, 2, 8}, {3, 5, 7});
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) {
      const Point3& a = g.center(i);
      const Point3& b = g.center(j);
      const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
      EXPECT_NEAR(g.d3(i, j), std::sqrt(dx * dx + dy * dy + dz * dz), 1e-12);
      EXPECT_NEAR(g.distance(Metric::k2D, i, j), std::sqrt(dx * dx + dy * dy),
                  1e-12);
    }
  }
}

TEST(DistanceTest, SymmetricAndZeroOnlyOnDiagonal) {
  LocationGrid g = Grid({4, 4, 4}, {5, 5, 5});
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) {
      EXPECT_EQ(g.d3(i, j), g.d3(j, i));
      EXPECT_EQ(g.d3(i, j) == 0.0, i == j);
    }
  }
}

TEST(DistanceTest, TriangleInequalityOnRandomTriples) {
  LocationGrid g = Grid({8, 8, 8}, {10, 10, 10});
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> cell(0, g.size() - 1);
  for (int k = 0; k < 10000; ++k) {
    const int a = cell(rng), b = cell(rng), c = cell(rng);
    ASSERT_LE(g.d3(a, c), g.d3(a, b) + g.d3(b, c) + 1e-12);
    ASSERT_LE(g.distance(Metric::k2D, a, c),
              g.distance(Metric::k2D, a, b) + g.distance(Metric::k2D, b, c) +
                  1e-12);
  }
}

TEST(DistanceTest, PlanarNeverExceedsSpatial) {
  LocationGrid g = Grid({8, 8, 8}, {10, 10, 10});
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) {
      ASSERT_LE(g.distance(Metric::k2D, i, j), g.d3(i, j));
    }
  }
}

TEST(DistanceTest, MaxDistanceIsCornerToCorner) {
  LocationGrid g = Grid({4, 4, 4}, {4, 4, 4});
  EXPECT_DOUBLE_EQ(g.MaxDistance(), 3.0 * std::sqrt(3.0));
}

TEST(CubeRotationsTest, TwentyFourDistinctProperRotations) {
  const auto& rotations = CubeRotations();
  std::set<std::pair<std::array<int, 3>, std::array<bool, 3>>> seen;
  for (const CubeRotation& r : rotations) {
    seen.insert({r.axis, r.flip});
    int m[3][3] = {};
    for (int k = 0; k < 3; ++k) m[k][r.axis[k]] = r.flip[k] ? -1 : 1;
    const int det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                    m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                    m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    EXPECT_EQ(det, 1);
  }
  EXPECT_EQ(seen.size(), 24u);
  EXPECT_THAT(rotations[0].axis, ElementsAre(0, 1, 2));
  EXPECT_THAT(rotations[0].flip, ElementsAre(false, false, false));
}

TEST(HilbertIndexTest, RoundTripsOnEveryOrder) {
  for (int order = 1; order <= 4; ++order) {
    const std::uint64_t n = std::uint64_t{1} << (3 * order);
    for (std::uint64_t h = 0; h < n; ++h) {
      ASSERT_EQ(HilbertIndex(HilbertPoint(h, order), order), h);
    }
  }
}

TEST(HilbertIndexTest, ConsecutivePointsAreLatticeNeighbors) {
  for (int order = 1; order <= 4; ++order) {
    const std::uint64_t n = std::uint64_t{1} << (3 * order);
    for (std::uint64_t h = 0; h + 1 < n; ++h) {
      Lattice a = HilbertPoint(h, order);
      Lattice b = HilbertPoint(h + 1, order);
      ASSERT_EQ(std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z),
                1);
    }
  }
}

TEST(HilbertOrdersTest, IdentityRotationIsCanonicalOrderOneCurve) {
  LocationGrid g = Grid({2, 2, 2}, {2, 2, 2});
  std::vector<HilbertOrder> orders = HilbertOrders(g);
  ASSERT_EQ(orders.size(), 24u);
  // Reflected Gray code over (x, y, z) bits.
  const std::vector<Lattice> expected = {{0, 0, 0}, {0, 0, 1}, {0, 1, 1},
                                         {0, 1, 0}, {1, 1, 0}, {1, 1, 1},
                                         {1, 0, 1}, {1, 0, 0}};
  std::vector<Lattice> got;
  for (int c : orders[0].permutation) got.push_back(g.lattice(c));
  EXPECT_THAT(got, ElementsAreArray(expected));
}

class HilbertOrdersCubeTest : public ::testing::TestWithParam<int> {};

TEST_P(HilbertOrdersCubeTest, EveryOrderIsAdjacentBijection) {
  const int side = GetParam();
  LocationGrid g = Grid({side, side, side}, {10, 10, 10});
  std::vector<HilbertOrder> orders = HilbertOrders(g);
  ASSERT_EQ(orders.size(), 24u);
  std::set<std::vector<int>> distinct;
  for (const HilbertOrder& o : orders) {
    ASSERT_EQ(static_cast<int>(o.permutation.size()), g.size());
    std::vector<int> sorted = o.permutation;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < g.size(); ++i) ASSERT_EQ(sorted[i], i);
    for (int r = 0; r < g.size(); ++r) {
      ASSERT_EQ(o.inverse[o.permutation[r]], r);
    }
    for (int r = 0; r + 1 < g.size(); ++r) {
      ASSERT_EQ(L1(g, o.permutation[r], o.permutation[r + 1]), 1)
          << "rotation " << o.rotation_id << " rank " << r;
    }
    distinct.insert(o.permutation);
  }
  EXPECT_EQ(distinct.size(), 24u);
}

INSTANTIATE_TEST_SUITE_P(Sides, HilbertOrdersCubeTest,
                         ::testing::Values(2, 4, 8));

TEST(HilbertOrdersTest, NonCubicGridKeepsBijectionAndRelativeOrder) {
  LocationGrid g = Grid({4, 2, 2}, {4, 2, 2});
  std::vector<HilbertOrder> orders = HilbertOrders(g, 5);
  ASSERT_EQ(orders.size(), 5u);
  for (const HilbertOrder& o : orders) {
    std::vector<int> sorted = o.permutation;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < g.size(); ++i) ASSERT_EQ(sorted[i], i);
  }
  // The identity rotation ranks cells by their index on the enclosing cube.
  std::vector<std::uint64_t> ranks;
  for (int c : orders[0].permutation) {
    ranks.push_back(HilbertIndex(g.lattice(c), 2));
  }
  EXPECT_TRUE(std::is_sorted(ranks.begin(), ranks.end()));
}

TEST(HilbertOrdersTest, RotationCountIsConfigurable) {
  LocationGrid g = Grid({4, 4, 4}, {4, 4, 4});
  std::vector<HilbertOrder> orders = HilbertOrders(g, 3);
  ASSERT_EQ(orders.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(orders[k].rotation_id, k);
}

TEST(LocationGridTest, CopiesShareDistanceTables) {
  LocationGrid g = Grid({4, 4, 4}, {4, 4, 4});
  LocationGrid copy = g;
  EXPECT_EQ(g.DistanceRow(Metric::k3D, 3).data(),
            copy.DistanceRow(Metric::k3D, 3).data());
  EXPECT_THAT(copy.d3(0, 63), DoubleNear(3.0 * std::sqrt(3.0), 1e-12));
}

}  // namespace
}  // namespace geoperturb
