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

#ifndef GEOPERTURB_MECHANISM_H_
#define GEOPERTURB_MECHANISM_H_

#include <random>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "geoperturb/grid.h"

namespace geoperturb {

using Rng = std::mt19937_64;

// Largest candidate list pf_exact_pmf will enumerate (8! orderings).
inline constexpr int kMaxEnumerableCandidates = 8;

// Release channel for one protected cell: Permute-and-Flip over the
// candidates with utility u(c) = -d(anchor, c) and sensitivity D(PLS).
class PerturbationChannel {
 public:
  // Candidates must be nonempty, exclude the anchor, and be distinct.
  static absl::StatusOr<PerturbationChannel> Create(
      int anchor, std::vector<int> candidates, const LocationGrid& grid,
      double sensitivity, double epsilon, Metric metric = Metric::k3D);

  // Same, with the anchor-to-candidate distances given directly.
  static absl::StatusOr<PerturbationChannel> FromDistances(
      int anchor, std::vector<int> candidates, std::vector<double> distances,
      double sensitivity, double epsilon);

  int anchor() const { return anchor_; }
  const std::vector<int>& candidates() const { return candidates_; }
  const std::vector<double>& distances() const { return distances_; }
  double utility(int k) const { return -distances_[k]; }
  double u_star() const { return u_star_; }
  double sensitivity() const { return sensitivity_; }
  double epsilon() const { return epsilon_; }
  int size() const { return static_cast<int>(candidates_.size()); }

  // exp(eps * (u_k - u*) / (2 * sensitivity)) per candidate, in (0, 1].
  const std::vector<double>& acceptance() const { return acceptance_; }

 private:
  PerturbationChannel() = default;

  int anchor_ = 0;
  std::vector<int> candidates_;
  std::vector<double> distances_;
  std::vector<double> acceptance_;
  double u_star_ = 0.0;
  double sensitivity_ = 1.0;
  double epsilon_ = 0.0;
};

// One Permute-and-Flip draw: scan a uniformly random ordering of the
// candidates and stop at the first one whose acceptance coin comes up.
// Returns a cell index.
int PfSample(const PerturbationChannel& channel, Rng& rng);

// Exact selection probabilities by enumerating every ordering. Refuses more
// than kMaxEnumerableCandidates candidates.
absl::StatusOr<std::vector<double>> PfExactPmf(
    const PerturbationChannel& channel);

// Exact selection probabilities for any candidate count:
//   P(k) = p_k * integral_0^1 prod_{j != k} (1 - t p_j) dt,
// integrated by Gauss-Legendre quadrature of sufficient order to be exact
// for the degree-(n-1) polynomial.
std::vector<double> PfPmf(const PerturbationChannel& channel);

// Distance that a PF release exceeds with probability at most psi:
//   (2D / eps) * [ln n_chi - eps / 2 - ln n_phi - ln psi - max_d].
double PfTailBound(double diameter, double epsilon, int n_chi, int n_phi,
                   double psi, double max_d);

// Exponential mechanism with u = -d(anchor, c):
//   P(c) proportional to exp(eps * u(c) / (2 * sensitivity)).
// The candidate list may include the anchor.
absl::StatusOr<std::vector<double>> ExpMechPmf(int anchor,
                                               std::span<const int> candidates,
                                               double epsilon,
                                               double sensitivity,
                                               const LocationGrid& grid,
                                               Metric metric = Metric::k3D);

absl::StatusOr<int> ExpMechSample(int anchor, std::span<const int> candidates,
                                  double epsilon, double sensitivity,
                                  const LocationGrid& grid, Rng& rng,
                                  Metric metric = Metric::k3D);

}  // namespace geoperturb

#endif  // GEOPERTURB_MECHANISM_H_
