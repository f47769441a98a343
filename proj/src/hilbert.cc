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

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "geoperturb/grid.h"

namespace geoperturb {
namespace {

int PermutationParity(const std::array<int, 3>& p) {
  int inversions = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (p[i] > p[j]) ++inversions;
    }
  }
  return inversions % 2;
}

std::array<CubeRotation, kRotationCount> BuildRotations() {
  std::array<CubeRotation, kRotationCount> out{};
  std::array<int, 3> axis = {0, 1, 2};
  int n = 0;
  do {
    for (int mask = 0; mask < 8; ++mask) {
      const std::array<bool, 3> flip = {(mask & 1) != 0, (mask & 2) != 0,
                                        (mask & 4) != 0};
      const int flips = flip[0] + flip[1] + flip[2];
      if ((PermutationParity(axis) + flips) % 2 != 0) continue;  // det -1
      out[n++] = CubeRotation{axis, flip};
    }
  } while (std::next_permutation(axis.begin(), axis.end()));
  return out;
}

std::array<int, 3> ToArray(const Lattice& c) { return {c.x, c.y, c.z}; }

// Transposed Hilbert representation (Skilling 2004) <-> axes.
void AxesToTranspose(std::array<std::uint32_t, 3>& x, int order) {
  const std::uint32_t m = 1u << (order - 1);
  for (std::uint32_t q = m; q > 1; q >>= 1) {
    const std::uint32_t p = q - 1;
    for (int i = 0; i < 3; ++i) {
      if (x[i] & q) {
        x[0] ^= p;
      } else {
        const std::uint32_t t = (x[0] ^ x[i]) & p;
        x[0] ^= t;
        x[i] ^= t;
      }
    }
  }
  for (int i = 1; i < 3; ++i) x[i] ^= x[i - 1];
  std::uint32_t t = 0;
  for (std::uint32_t q = m; q > 1; q >>= 1) {
    if (x[2] & q) t ^= q - 1;
  }
  for (int i = 0; i < 3; ++i) x[i] ^= t;
}

void TransposeToAxes(std::array<std::uint32_t, 3>& x, int order) {
  const std::uint32_t n = 2u << (order - 1);
  std::uint32_t t = x[2] >> 1;
  for (int i = 2; i > 0; --i) x[i] ^= x[i - 1];
  x[0] ^= t;
  for (std::uint32_t q = 2; q != n; q <<= 1) {
    const std::uint32_t p = q - 1;
    for (int i = 2; i >= 0; --i) {
      if (x[i] & q) {
        x[0] ^= p;
      } else {
        t = (x[0] ^ x[i]) & p;
        x[0] ^= t;
        x[i] ^= t;
      }
    }
  }
}

}  // namespace

const std::array<CubeRotation, kRotationCount>& CubeRotations() {
  static const std::array<CubeRotation, kRotationCount> rotations =
      BuildRotations();
  return rotations;
}

std::uint64_t HilbertIndex(Lattice c, int order) {
  std::array<std::uint32_t, 3> x = {static_cast<std::uint32_t>(c.x),
                                    static_cast<std::uint32_t>(c.y),
                                    static_cast<std::uint32_t>(c.z)};
  AxesToTranspose(x, order);
  std::uint64_t h = 0;
  for (int level = 0; level < order; ++level) {
    for (int i = 0; i < 3; ++i) {
      const std::uint64_t bit = (x[i] >> level) & 1u;
      h |= bit << (3 * level + (2 - i));
    }
  }
  return h;
}

Lattice HilbertPoint(std::uint64_t index, int order) {
  std::array<std::uint32_t, 3> x = {0, 0, 0};
  for (int level = 0; level < order; ++level) {
    for (int i = 0; i < 3; ++i) {
      const std::uint32_t bit = (index >> (3 * level + (2 - i))) & 1u;
      x[i] |= bit << level;
    }
  }
  TransposeToAxes(x, order);
  return {static_cast<int>(x[0]), static_cast<int>(x[1]),
          static_cast<int>(x[2])};
}

std::vector<HilbertOrder> HilbertOrders(const LocationGrid& grid,
                                        int rotation_count) {
  rotation_count = std::clamp(rotation_count, 1, kRotationCount);
  const auto& dims = grid.dims();
  const int side = std::max({dims[0], dims[1], dims[2]});
  int order = 0;
  while ((1 << order) < side) ++order;
  const std::uint64_t cube_cells =
      static_cast<std::uint64_t>(side) * side * side;

  std::vector<HilbertOrder> orders;
  orders.reserve(rotation_count);
  for (int r = 0; r < rotation_count; ++r) {
    const CubeRotation& rot = CubeRotations()[r];
    HilbertOrder out;
    out.rotation_id = r;
    out.permutation.reserve(grid.size());
    out.inverse.assign(grid.size(), -1);
    for (std::uint64_t h = 0; h < cube_cells; ++h) {
      const std::array<int, 3> p = ToArray(HilbertPoint(h, order));
      std::array<int, 3> c{};
      for (int k = 0; k < 3; ++k) {
        c[rot.axis[k]] = rot.flip[k] ? side - 1 - p[k] : p[k];
      }
      const Lattice cell{c[0], c[1], c[2]};
      if (!grid.InBounds(cell)) continue;
      const int index = grid.IndexOf(cell);
      out.inverse[index] = static_cast<int>(out.permutation.size());
      out.permutation.push_back(index);
    }
    orders.push_back(std::move(out));
  }
  return orders;
}

}  // namespace geoperturb
