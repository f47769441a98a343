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

#ifndef GEOPERTURB_PLS_H_
#define GEOPERTURB_PLS_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "geoperturb/grid.h"

namespace geoperturb {

// Where the attacker's guess may range when scoring a protection set.
enum class GuessScope {
  kWholeMap,  // any cell of the grid
  kMembers,   // only cells of the set itself
};

struct PlsOptions {
  Metric metric = Metric::k3D;
  GuessScope scope = GuessScope::kWholeMap;
};

// A protection location set: cells made mutually indistinguishable around
// the protected cell. Built only through FindPls, which checks that the
// anchor is a member, there are at least two members, the stored diameter
// matches the members, and both cond_error and diameter reach
// exp(epsilon) * e_m.
struct ProtectionLocationSet {
  std::vector<int> members;  // curve order
  int anchor = 0;
  double diameter = 0.0;
  double cond_error = 0.0;
  double epsilon = 0.0;
  double e_m = 0.0;
  int rotation_id = 0;
  int window_start = 0;  // rank of members.front() in the rotation's order

  double threshold() const;
};

// Attacker's best expected error when told the user is somewhere in
// `members`, with the prior renormalized over them. Zero prior mass on the
// members is InvalidArgument.
absl::StatusOr<double> ConditionalExpectedError(std::span<const int> members,
                                                std::span<const double> prior,
                                                const LocationGrid& grid,
                                                const PlsOptions& options = {});

// Largest pairwise distance among members; 0 for a singleton.
double Diameter(std::span<const int> members, const LocationGrid& grid,
                Metric metric = Metric::k3D);

// Minimum-diameter set among all contiguous windows of each Hilbert order
// that contain the anchor and satisfy cond_error >= exp(epsilon) * e_m.
// Ties go to fewer members, then lower rotation id, then earlier window
// start. FailedPrecondition when no window qualifies.
absl::StatusOr<ProtectionLocationSet> FindPls(
    int anchor, std::span<const double> prior, double epsilon, double e_m,
    std::span<const HilbertOrder> orders, const LocationGrid& grid,
    const PlsOptions& options = {});

}  // namespace geoperturb

#endif  // GEOPERTURB_PLS_H_
