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

#include "absl/strings/str_cat.h"

namespace geoperturb {
namespace {

bool IsPowerOfTwo(int v) { return v > 0 && (v & (v - 1)) == 0; }

absl::Status CheckIndex(const LocationGrid& grid, int i, int j) {
  if (!grid.contains(i) || !grid.contains(j)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "cell index out of range: (", i, ", ", j, ") on a grid of ",
        grid.size(), " cells"));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<LocationGrid> LocationGrid::Create(
    std::array<int, 3> dims, std::array<double, 3> extent) {
  for (int k = 0; k < 3; ++k) {
    if (dims[k] < 2 || !IsPowerOfTwo(dims[k])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "grid dimension ", k, " is ", dims[k],
          "; each axis needs a power of two >= 2 cells"));
    }
    if (!(extent[k] > 0.0) || !std::isfinite(extent[k])) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid extent ", k, " must be positive, got ",
                       extent[k]));
    }
  }
  LocationGrid grid;
  grid.dims_ = dims;
  grid.extent_ = extent;
  const std::array<double, 3> pitch = grid.pitch();
  const int n = dims[0] * dims[1] * dims[2];
  grid.lattice_.reserve(n);
  grid.centers_.reserve(n);
  for (int x = 0; x < dims[0]; ++x) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int z = 0; z < dims[2]; ++z) {
        grid.lattice_.push_back({x, y, z});
        grid.centers_.push_back({(x + 0.5) * pitch[0], (y + 0.5) * pitch[1],
                                 (z + 0.5) * pitch[2]});
      }
    }
  }
  auto d3 = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(n) * n);
  auto d2 = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const Point3& a = grid.centers_[i];
    for (int j = 0; j < n; ++j) {
      const Point3& b = grid.centers_[j];
      const double dx = a.x - b.x;
      const double dy = a.y - b.y;
      const double dz = a.z - b.z;
      const std::size_t at = static_cast<std::size_t>(i) * n + j;
      (*d3)[at] = std::sqrt(dx * dx + dy * dy + dz * dz);
      (*d2)[at] = std::sqrt(dx * dx + dy * dy);
    }
  }
  grid.dist3_ = std::move(d3);
  grid.dist2_ = std::move(d2);
  return grid;
}

std::array<double, 3> LocationGrid::pitch() const {
  return {extent_[0] / dims_[0], extent_[1] / dims_[1],
          extent_[2] / dims_[2]};
}

bool LocationGrid::InBounds(const Lattice& c) const {
  return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dims_[0] &&
         c.y < dims_[1] && c.z < dims_[2];
}

absl::StatusOr<double> LocationGrid::Distance3(int i, int j) const {
  if (absl::Status s = CheckIndex(*this, i, j); !s.ok()) return s;
  return distance(Metric::k3D, i, j);
}

absl::StatusOr<double> LocationGrid::Distance2(int i, int j) const {
  if (absl::Status s = CheckIndex(*this, i, j); !s.ok()) return s;
  return distance(Metric::k2D, i, j);
}

double LocationGrid::MaxDistance() const {
  const auto p = pitch();
  const double dx = extent_[0] - p[0];
  const double dy = extent_[1] - p[1];
  const double dz = extent_[2] - p[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace geoperturb
