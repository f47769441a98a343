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

#ifndef GEOPERTURB_BASELINES_H_
#define GEOPERTURB_BASELINES_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "geoperturb/adversary.h"
#include "geoperturb/budget.h"
#include "geoperturb/grid.h"
#include "geoperturb/mechanism.h"
#include "geoperturb/mobility.h"
#include "geoperturb/pls.h"

namespace geoperturb {

// The proposed mechanism and the three comparison mechanisms. Each baseline
// removes exactly one ingredient of the proposed pipeline:
//   k3dpim    no protection set and no adaptive budget (exponential
//             mechanism over the delta-location set, uniform budget),
//   kP3dlppm  no temporal correlation (the mechanism keeps the initial prior),
//   k2dptppm  no height (planar distances; releases keep the true floor).
enum class StrategyKind { k3dstpm, k3dpim, kP3dlppm, k2dptppm };

std::string_view StrategyName(StrategyKind kind);
absl::StatusOr<StrategyKind> ParseStrategy(std::string_view name);

// Where PF draws releases from for a protected cell.
enum class ReleaseDomain {
  kDeltaSet,       // the delta-location set without the protected cell
  kProtectionSet,  // the protection set without the protected cell
};

struct MechanismParams {
  double eps_window = 1.0;  // window budget for one trajectory
  double e_m = 0.5;         // meters
  int window = 4;
  double delta = 0.3;
  int n_possible = 50;      // n in eps_s = n * eps_window
  double eps_floor = BudgetLedger::kDefaultFloor;
  GuessScope guess_scope = GuessScope::kWholeMap;
  ReleaseDomain release_domain = ReleaseDomain::kDeltaSet;
};

// Everything a run needs besides the mechanism parameters.
struct Scenario {
  LocationGrid grid;
  std::shared_ptr<const std::vector<HilbertOrder>> orders;
  TransitionMatrix transitions;
  std::vector<double> initial_prior;
  std::vector<int> locations;   // designated cells, ascending
  std::vector<int> trajectory;  // real cells, one per timestamp
  UserProfile profile;
};

// Release behavior of one protected cell at one timestamp.
struct ProtectedCell {
  int cell = 0;
  double epsilon = 0.0;
  double sensitivity = 0.0;
  std::optional<ProtectionLocationSet> pls;
  std::optional<PerturbationChannel> channel;  // PF strategies
  std::vector<int> exp_candidates;             // exponential mechanism
  OutputDistribution outputs;                  // exact, after projection
};

// The whole release channel of one timestamp. Depends only on the state the
// attacker also knows (beliefs, budget history), not on the real location.
class StepMechanism final : public ReleaseModel {
 public:
  const PossibleLocationSet& delta_set() const { return delta_set_; }
  const std::vector<ProtectedCell>& cells() const { return cells_; }
  bool suppressed() const { return suppressed_; }
  const ProtectedCell& Protecting(int true_cell) const;
  const OutputDistribution& Outputs(int true_cell) const override;

  // Draws a release for a user at `real` with the strategy's mechanism.
  int Release(int real, const LocationGrid& grid, Rng& rng) const;

 private:
  friend class TrajectorySimulator;

  PossibleLocationSet delta_set_;
  std::vector<ProtectedCell> cells_;  // aligned with delta_set_.members
  std::vector<int> route_;            // cell -> index into cells_
  Metric metric_ = Metric::k3D;
  bool keep_floor_ = false;
  bool suppressed_ = false;
  OutputDistribution nothing_;
};

// Steps one user's trajectory through a strategy. The simulator holds no
// mutable state; State carries the evolving beliefs and budget.
class TrajectorySimulator {
 public:
  struct State {
    int t = 0;
    std::vector<double> prior;  // attacker's prior for timestamp t
    BudgetLedger ledger;
  };

  static absl::StatusOr<TrajectorySimulator> Create(const Scenario& scenario,
                                                    StrategyKind kind,
                                                    const MechanismParams& p);

  absl::StatusOr<State> Initial() const;
  absl::StatusOr<StepMechanism> Plan(const State& state) const;
  // Moves to the next timestamp after a release (nullopt if suppressed).
  absl::StatusOr<State> Advance(const State& state, const StepMechanism& plan,
                                int real, std::optional<int> released) const;

  StrategyKind kind() const { return kind_; }
  const Scenario& scenario() const { return *scenario_; }
  const MechanismParams& params() const { return params_; }

 private:
  TrajectorySimulator(const Scenario& s, StrategyKind k, MechanismParams p)
      : scenario_(&s), kind_(k), params_(p) {}

  Metric metric() const {
    return kind_ == StrategyKind::k2dptppm ? Metric::k2D : Metric::k3D;
  }

  const Scenario* scenario_;
  StrategyKind kind_;
  MechanismParams params_;
};

// Runs the scenario's trajectory through a strategy against the
// correlation-aware attacker. Deterministic in (scenario, params, seed).
absl::StatusOr<AttackTrace> RunStrategy(StrategyKind kind,
                                        const Scenario& scenario,
                                        const MechanismParams& params,
                                        std::uint64_t seed);

inline absl::StatusOr<AttackTrace> Run3dstpm(const Scenario& s,
                                             const MechanismParams& p,
                                             std::uint64_t seed) {
  return RunStrategy(StrategyKind::k3dstpm, s, p, seed);
}
inline absl::StatusOr<AttackTrace> Run3dpim(const Scenario& s,
                                            const MechanismParams& p,
                                            std::uint64_t seed) {
  return RunStrategy(StrategyKind::k3dpim, s, p, seed);
}
inline absl::StatusOr<AttackTrace> RunP3dlppm(const Scenario& s,
                                              const MechanismParams& p,
                                              std::uint64_t seed) {
  return RunStrategy(StrategyKind::kP3dlppm, s, p, seed);
}
inline absl::StatusOr<AttackTrace> Run2dptppm(const Scenario& s,
                                              const MechanismParams& p,
                                              std::uint64_t seed) {
  return RunStrategy(StrategyKind::k2dptppm, s, p, seed);
}

}  // namespace geoperturb

#endif  // GEOPERTURB_BASELINES_H_
