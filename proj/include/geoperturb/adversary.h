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

#ifndef GEOPERTURB_ADVERSARY_H_
#define GEOPERTURB_ADVERSARY_H_

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "geoperturb/grid.h"
#include "geoperturb/mobility.h"

namespace geoperturb {

// Sparse output distribution, sorted by cell.
using OutputDistribution = std::vector<std::pair<int, double>>;

// Probability of `cell` under `dist`, 0 when absent.
double ProbabilityOf(const OutputDistribution& dist, int cell);

// The release channel f(x' | x) at one timestamp, as known to the attacker.
class ReleaseModel {
 public:
  virtual ~ReleaseModel() = default;
  // Distribution of the released cell for a user truly at `true_cell`.
  virtual const OutputDistribution& Outputs(int true_cell) const = 0;
  double Likelihood(int true_cell, int output) const {
    return ProbabilityOf(Outputs(true_cell), output);
  }
};

// min over guesses of the posterior-weighted distance.
inline double ExpectedInferenceError(std::span<const double> posterior,
                                     const LocationGrid& grid,
                                     Metric metric = Metric::k3D) {
  return InferLocation(posterior, grid, metric).expected_error;
}

struct AttackOutcome {
  std::vector<double> posterior;
  int inferred = 0;
};

// Bayes update of `prior` on the observed release followed by the optimal
// (3D) inference.
absl::StatusOr<AttackOutcome> Attack(std::span<const double> prior,
                                     const ReleaseModel& model, int released,
                                     const LocationGrid& grid);

// Expected attacker error and release distance over the release
// distribution of a user at `real`, given the attacker's prior.
struct ExpectedOutcome {
  double privacy = 0.0;  // E d3(real, inferred)
  double qos = 0.0;      // E d3(real, released)
};
absl::StatusOr<ExpectedOutcome> ExpectedAttack(std::span<const double> prior,
                                               const ReleaseModel& model,
                                               int real,
                                               const LocationGrid& grid);

struct StepRecord {
  int t = 0;
  int real = 0;
  int anchor = 0;                 // the cell actually protected
  std::optional<int> released;    // empty when the query was suppressed
  int inferred = 0;
  std::vector<double> prior;
  std::vector<double> posterior;
  double real_to_inferred = 0.0;  // d3
  double real_to_released = 0.0;  // d3; 0 when suppressed
  // Conditional expectations over this step's release given the history.
  double expected_privacy = 0.0;
  double expected_qos = 0.0;
  double epsilon = 0.0;           // budget spent on the anchor
  double pls_diameter = 0.0;      // 0 when no protection set was used
  int delta_set_size = 0;
};

struct AttackTrace {
  std::vector<StepRecord> steps;
  std::vector<double> budget_history;
  int window = 1;
  double eps_window = 0.0;
  int suppressed = 0;
};

// Mean with the standard error of the mean across samples.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

// Which per-step quantity the trace metrics average.
enum class MetricSource {
  kConditional,  // Rao-Blackwellized: expectation over the step's release
  kSampled,      // the realized release and inference
};

// Trajectory privacy p: attacker's expected 3D error. Each trace
// contributes its mean over timestamps; the estimate is across traces.
absl::StatusOr<Estimate> TrajectoryPrivacy(
    std::span<const AttackTrace> traces,
    MetricSource source = MetricSource::kConditional);

// QoS loss q: expected real-to-released 3D distance. Suppressed steps are
// skipped.
absl::StatusOr<Estimate> QosLoss(
    std::span<const AttackTrace> traces,
    MetricSource source = MetricSource::kConditional);

// Mean and standard error of arbitrary samples.
Estimate Summarize(std::span<const double> samples);

}  // namespace geoperturb

#endif  // GEOPERTURB_ADVERSARY_H_
