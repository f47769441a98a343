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

#ifndef GEOPERTURB_MOBILITY_H_
#define GEOPERTURB_MOBILITY_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "geoperturb/grid.h"

namespace geoperturb {

// Absolute tolerance for "sums to one" checks on probability vectors.
inline constexpr double kSimplexTolerance = 1e-9;

// Returns InvalidArgument unless p is nonnegative and sums to 1.
absl::Status CheckSimplex(std::span<const double> p);

// Dense N x N count matrix, row-major.
struct CountMatrix {
  int n = 0;
  std::vector<std::int64_t> counts;

  explicit CountMatrix(int size = 0)
      : n(size), counts(static_cast<std::size_t>(size) * size, 0) {}
  std::int64_t& at(int i, int j) {
    return counts[static_cast<std::size_t>(i) * n + j];
  }
  std::int64_t at(int i, int j) const {
    return counts[static_cast<std::size_t>(i) * n + j];
  }
};

// Dense N x N boolean reachability, row-major.
struct Reachability {
  int n = 0;
  std::vector<std::uint8_t> reachable;

  explicit Reachability(int size = 0, bool value = true)
      : n(size),
        reachable(static_cast<std::size_t>(size) * size, value ? 1 : 0) {}
  bool at(int i, int j) const {
    return reachable[static_cast<std::size_t>(i) * n + j] != 0;
  }
  void set(int i, int j, bool v) {
    reachable[static_cast<std::size_t>(i) * n + j] = v ? 1 : 0;
  }
};

// Row-stochastic matrix of one-step location transfer probabilities.
class TransitionMatrix {
 public:
  // Validates shape, nonnegativity and row sums.
  static absl::StatusOr<TransitionMatrix> FromDense(int n,
                                                    std::vector<double> m);

  int size() const { return n_; }
  double at(int i, int j) const {
    return m_[static_cast<std::size_t>(i) * n_ + j];
  }
  std::span<const double> row(int i) const {
    return {m_.data() + static_cast<std::size_t>(i) * n_,
            static_cast<std::size_t>(n_)};
  }

 private:
  TransitionMatrix(int n, std::vector<double> m) : n_(n), m_(std::move(m)) {}

  int n_ = 0;
  std::vector<double> m_;
};

// m_ij = n_ij / sum_j n_ij. Rows with no observed transfers become
// self-loops. A count on an unreachable pair is an error.
absl::StatusOr<TransitionMatrix> EstimateTransitionMatrix(
    const CountMatrix& counts, const Reachability& reachability);

// Reads "row,col,count" lines (a header line and blank lines are skipped)
// into an n x n count matrix.
absl::StatusOr<CountMatrix> ReadCountsCsv(std::istream& in, int n);

// Next-step prior: posterior (row vector) times M.
absl::StatusOr<std::vector<double>> AdvancePrior(
    std::span<const double> posterior, const TransitionMatrix& m);

// posterior[i] proportional to prior[i] * likelihood[i]. A zero
// denominator means the observation was impossible and is FailedPrecondition.
absl::StatusOr<std::vector<double>> BayesPosterior(
    std::span<const double> prior, std::span<const double> likelihood);

// The delta-location set: the fewest highest-prior cells holding at least
// 1 - delta of the prior mass.
struct PossibleLocationSet {
  std::vector<int> members;  // ascending cell index
  double delta = 0.0;
  double mass = 0.0;
  // Set when the real location fell outside the set: the nearest member.
  std::optional<int> surrogate;

  bool contains(int cell) const;
  // The cell the mechanism protects for a user actually at `real`.
  int anchor(int real) const;
};

// Members are chosen by prior descending, then index ascending, taking the
// shortest prefix that reaches 1 - delta. `metric` picks the distance used
// for the surrogate search.
absl::StatusOr<PossibleLocationSet> DeltaLocationSet(
    std::span<const double> prior, double delta, int real,
    const LocationGrid& grid, Metric metric = Metric::k3D);

// The member of `members` nearest to `cell`; ties go to the lowest index.
int NearestMember(std::span<const int> members, int cell,
                  const LocationGrid& grid, Metric metric);

struct Inference {
  int cell = 0;
  double expected_error = 0.0;
};

// Bayes-optimal guess: the cell minimizing the posterior-weighted distance,
// ties to the lowest index, with the attained minimum.
Inference InferLocation(std::span<const double> posterior,
                        const LocationGrid& grid, Metric metric = Metric::k3D);

inline int OptimalInference(std::span<const double> posterior,
                            const LocationGrid& grid,
                            Metric metric = Metric::k3D) {
  return InferLocation(posterior, grid, metric).cell;
}

}  // namespace geoperturb

#endif  // GEOPERTURB_MOBILITY_H_
