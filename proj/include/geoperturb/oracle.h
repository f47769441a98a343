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

#ifndef GEOPERTURB_ORACLE_H_
#define GEOPERTURB_ORACLE_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "geoperturb/baselines.h"
#include "geoperturb/grid.h"
#include "geoperturb/pls.h"

// Exhaustive reference computations for tiny instances. They share no code
// paths with the searches and estimators they check beyond the grid tables.
namespace geoperturb::oracle {

// Largest grid the subset oracle accepts.
inline constexpr int kMaxSubsetCells = 16;

struct PlsCandidate {
  std::vector<int> members;  // ascending
  double diameter = 0.0;
  double cond_error = 0.0;
};

// E(members) by direct summation over every guess in scope.
double NaiveConditionalError(std::span<const int> members,
                             std::span<const double> prior,
                             const LocationGrid& grid,
                             const PlsOptions& options = {});

// Smallest-diameter feasible set over all subsets containing the anchor
// with at least two members (ties: fewer members, then lexicographic).
// FailedPrecondition when nothing qualifies.
absl::StatusOr<PlsCandidate> BestSubsetPls(int anchor,
                                           std::span<const double> prior,
                                           double epsilon, double e_m,
                                           const LocationGrid& grid,
                                           const PlsOptions& options = {});

// Smallest-diameter feasible contiguous window over the given orders,
// recomputing every window from scratch.
absl::StatusOr<PlsCandidate> BestWindowPls(int anchor,
                                           std::span<const double> prior,
                                           double epsilon, double e_m,
                                           std::span<const HilbertOrder> orders,
                                           const LocationGrid& grid,
                                           const PlsOptions& options = {});

struct ExactMetrics {
  double p = 0.0;  // E[mean over t of d3(x_t, inferred_t)]
  double q = 0.0;  // E[mean over released t of d3(x_t, released_t)]
  int branches = 0;
};

// Enumerates every release sequence of the scenario's fixed trajectory.
// Channels are recomputed by permutation enumeration (PF) or direct
// softmax (exponential mechanism); the attacker's posterior at each step is
// read off the joint table over all hidden paths. Needs at most 8 PF
// candidates per cell and a short trajectory.
absl::StatusOr<ExactMetrics> ExactTraceMetrics(StrategyKind kind,
                                               const Scenario& scenario,
                                               const MechanismParams& params);

}  // namespace geoperturb::oracle

#endif  // GEOPERTURB_ORACLE_H_
