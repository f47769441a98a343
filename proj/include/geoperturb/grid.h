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

#ifndef GEOPERTURB_GRID_H_
#define GEOPERTURB_GRID_H_

#include <array>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace geoperturb {

// Integer lattice coordinate of a cell.
struct Lattice {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const Lattice&, const Lattice&) = default;
};

// Real-space point in meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Which distance a computation uses. k2D drops the height component and is
// only used by the horizontal-only baseline.
enum class Metric { k3D, k2D };

// A discretized box of dims.x * dims.y * dims.z cells. Cell indices are
// x-major: index = (x * dims.y + y) * dims.z + z. Distances are between cell
// centers and are precomputed into dense tables shared by copies of the grid.
class LocationGrid {
 public:
  // Each dim must be a power of two >= 2 and each extent positive.
  static absl::StatusOr<LocationGrid> Create(std::array<int, 3> dims,
                                             std::array<double, 3> extent);

  int size() const { return static_cast<int>(lattice_.size()); }
  const std::array<int, 3>& dims() const { return dims_; }
  const std::array<double, 3>& extent() const { return extent_; }
  std::array<double, 3> pitch() const;

  bool contains(int cell) const { return cell >= 0 && cell < size(); }
  const Lattice& lattice(int cell) const { return lattice_[cell]; }
  const Point3& center(int cell) const { return centers_[cell]; }
  int IndexOf(const Lattice& c) const {
    return (c.x * dims_[1] + c.y) * dims_[2] + c.z;
  }
  bool InBounds(const Lattice& c) const;

  // Checked distances; out-of-range indices are InvalidArgument.
  absl::StatusOr<double> Distance3(int i, int j) const;
  absl::StatusOr<double> Distance2(int i, int j) const;

  // Unchecked table lookup for inner loops.
  double distance(Metric metric, int i, int j) const {
    assert(contains(i) && contains(j));
    const auto& table = metric == Metric::k3D ? *dist3_ : *dist2_;
    return table[static_cast<std::size_t>(i) * lattice_.size() + j];
  }
  double d3(int i, int j) const { return distance(Metric::k3D, i, j); }

  // Row of the distance table for cell i.
  std::span<const double> DistanceRow(Metric metric, int i) const {
    const auto& table = metric == Metric::k3D ? *dist3_ : *dist2_;
    return {table.data() + static_cast<std::size_t>(i) * lattice_.size(),
            lattice_.size()};
  }

  // Largest pairwise 3D distance on the grid.
  double MaxDistance() const;

 private:
  LocationGrid() = default;

  std::array<int, 3> dims_{};
  std::array<double, 3> extent_{};
  std::vector<Lattice> lattice_;
  std::vector<Point3> centers_;
  std::shared_ptr<const std::vector<double>> dist3_;
  std::shared_ptr<const std::vector<double>> dist2_;
};

// One traversal of the grid along a rotated 3D Hilbert curve.
struct HilbertOrder {
  int rotation_id = 0;
  std::vector<int> permutation;  // rank -> cell
  std::vector<int> inverse;      // cell -> rank
};

inline constexpr int kRotationCount = 24;

// Signed axis permutation with determinant +1. Applied to lattice
// coordinates inside the enclosing cube before curve indexing.
struct CubeRotation {
  std::array<int, 3> axis;  // output axis k reads input axis axis[k]
  std::array<bool, 3> flip;
};

// All 24 proper rotations of the cube, identity first.
const std::array<CubeRotation, kRotationCount>& CubeRotations();

// Hilbert index <-> lattice coordinate on a cube of side 2^order.
std::uint64_t HilbertIndex(Lattice c, int order);
Lattice HilbertPoint(std::uint64_t index, int order);

// One order per rotation (rotation_count <= 24, taken in CubeRotations()
// order). Non-cubic grids are embedded in the smallest enclosing cube and
// out-of-grid cells are skipped.
std::vector<HilbertOrder> HilbertOrders(const LocationGrid& grid,
                                        int rotation_count = kRotationCount);

}  // namespace geoperturb

#endif  // GEOPERTURB_GRID_H_
