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

#include "geoperturb/baselines.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace geoperturb {

std::string_view StrategyName(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::k3dstpm:
      return "3DSTPM";
    case StrategyKind::k3dpim:
      return "3DPIM";
    case StrategyKind::kP3dlppm:
      return "P3DLPPM";
    case StrategyKind::k2dptppm:
      return "2DPTPPM";
  }
  return "unknown";
}

absl::StatusOr<StrategyKind> ParseStrategy(std::string_view name) {
  std::string upper = absl::AsciiStrToUpper(std::string(name));
  for (StrategyKind kind :
       {StrategyKind::k3dstpm, StrategyKind::k3dpim, StrategyKind::kP3dlppm,
        StrategyKind::k2dptppm}) {
    if (upper == StrategyName(kind)) return kind;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown strategy '", std::string(name),
      "' (expected 3DSTPM, 3DPIM, P3DLPPM or 2DPTPPM)"));
}

namespace {

// The cell with c's x and y on `floor`'s z-layer.
int OnLayer(const LocationGrid& grid, int c, int floor) {
  Lattice l = grid.lattice(c);
  l.z = grid.lattice(floor).z;
  return grid.IndexOf(l);
}

OutputDistribution Accumulate(const std::vector<int>& cells,
                              const std::vector<double>& probs) {
  std::map<int, double> acc;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (probs[k] > 0.0) acc[cells[k]] += probs[k];
  }
  return OutputDistribution(acc.begin(), acc.end());
}

}  // namespace

const ProtectedCell& StepMechanism::Protecting(int true_cell) const {
  return cells_[route_[true_cell]];
}

const OutputDistribution& StepMechanism::Outputs(int true_cell) const {
  if (suppressed_) return nothing_;
  return Protecting(true_cell).outputs;
}

int StepMechanism::Release(int real, const LocationGrid& grid,
                           Rng& rng) const {
  const ProtectedCell& pc = Protecting(real);
  if (pc.channel) {
    int out = PfSample(*pc.channel, rng);
    return keep_floor_ ? OnLayer(grid, out, pc.cell) : out;
  }
  if (!pc.exp_candidates.empty()) {
    // Candidates and sensitivity were validated when the plan was built.
    return *ExpMechSample(pc.cell, pc.exp_candidates, pc.epsilon,
                          pc.sensitivity, grid, rng, metric_);
  }
  return pc.cell;
}

absl::StatusOr<TrajectorySimulator> TrajectorySimulator::Create(
    const Scenario& scenario, StrategyKind kind, const MechanismParams& p) {
  const int n = scenario.grid.size();
  if (scenario.transitions.size() != n) {
    return absl::InvalidArgumentError(
        absl::StrCat("transition matrix has ", scenario.transitions.size(),
                     " states for a grid of ", n, " cells"));
  }
  if (absl::Status s = CheckSimplex(scenario.initial_prior); !s.ok()) {
    return s;
  }
  if (static_cast<int>(scenario.initial_prior.size()) != n) {
    return absl::InvalidArgumentError("initial prior does not match the grid");
  }
  for (int cell : scenario.trajectory) {
    if (!scenario.grid.contains(cell)) {
      return absl::InvalidArgumentError(
          absl::StrCat("trajectory cell ", cell, " is not on the grid"));
    }
  }
  if (scenario.orders == nullptr || scenario.orders->empty()) {
    return absl::InvalidArgumentError("scenario has no Hilbert orders");
  }
  if (absl::Status s = scenario.profile.Validate(); !s.ok()) return s;
  const UserProfile& prof = scenario.profile;
  if (static_cast<int>(prof.sojourn.size()) != n ||
      static_cast<int>(prof.visit_freq.size()) != n ||
      static_cast<int>(prof.semantic.size()) != n) {
    return absl::InvalidArgumentError("user profile does not match the grid");
  }
  if (!(p.eps_window > 0.0) || !(p.e_m > 0.0) || p.window < 1 ||
      p.n_possible < 1) {
    return absl::InvalidArgumentError(
        "eps_window and e_m must be positive; window and n_possible >= 1");
  }
  if (!(p.delta > 0.0 && p.delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", p.delta));
  }
  return TrajectorySimulator(scenario, kind, p);
}

absl::StatusOr<TrajectorySimulator::State> TrajectorySimulator::Initial()
    const {
  absl::StatusOr<BudgetLedger> ledger =
      BudgetLedger::Create(params_.eps_window * params_.n_possible,
                           params_.window, params_.n_possible,
                           params_.eps_floor);
  if (!ledger.ok()) return ledger.status();
  return State{0, scenario_->initial_prior, *std::move(ledger)};
}

absl::StatusOr<StepMechanism> TrajectorySimulator::Plan(
    const State& state) const {
  const LocationGrid& grid = scenario_->grid;
  const Metric m = metric();
  const std::vector<double>& mech_prior =
      kind_ == StrategyKind::kP3dlppm ? scenario_->initial_prior : state.prior;

  StepMechanism plan;
  plan.metric_ = m;
  plan.keep_floor_ = kind_ == StrategyKind::k2dptppm;

  absl::StatusOr<PossibleLocationSet> dset =
      DeltaLocationSet(mech_prior, params_.delta, 0, grid, m);
  if (!dset.ok()) return dset.status();
  plan.delta_set_ = *std::move(dset);
  plan.delta_set_.surrogate.reset();
  const std::vector<int>& members = plan.delta_set_.members;

  plan.route_.resize(grid.size());
  for (int c = 0; c < grid.size(); ++c) {
    int nearest = NearestMember(members, c, grid, m);
    plan.route_[c] = static_cast<int>(
        std::lower_bound(members.begin(), members.end(), nearest) -
        members.begin());
  }

  BudgetLedger ledger = state.ledger;
  const bool pim = kind_ == StrategyKind::k3dpim;
  if (ledger.WindowRemaining() < ledger.eps_floor() ||
      (pim && ledger.WindowRemaining() + 1e-12 <
                  params_.eps_window / params_.window)) {
    plan.suppressed_ = true;
    return plan;
  }

  const double pim_sensitivity = Diameter(members, grid, Metric::k3D);
  PlsOptions options{m, params_.guess_scope};

  for (int cell : members) {
    ProtectedCell pc;
    pc.cell = cell;
    if (pim) {
      pc.epsilon = params_.eps_window / params_.window;
    } else {
      absl::StatusOr<double> eps = ledger.Allocate(
          scenario_->profile, mech_prior, grid, cell, false, m);
      if (!eps.ok()) return eps.status();
      pc.epsilon = *eps;
    }
    if (members.size() == 1) {
      pc.outputs = {{cell, 1.0}};
      plan.cells_.push_back(std::move(pc));
      continue;
    }

    if (pim) {
      pc.sensitivity = pim_sensitivity;
      pc.exp_candidates = members;
      absl::StatusOr<std::vector<double>> pmf =
          ExpMechPmf(cell, members, pc.epsilon, pc.sensitivity, grid,
                     Metric::k3D);
      if (!pmf.ok()) return pmf.status();
      pc.outputs = Accumulate(members, *pmf);
      plan.cells_.push_back(std::move(pc));
      continue;
    }

    absl::StatusOr<ProtectionLocationSet> pls =
        FindPls(cell, mech_prior, pc.epsilon, params_.e_m,
                *scenario_->orders, grid, options);
    if (!pls.ok()) return pls.status();
    pc.sensitivity = pls->diameter;

    std::vector<int> candidates;
    const std::vector<int>& domain =
        params_.release_domain == ReleaseDomain::kDeltaSet ? members
                                                           : pls->members;
    for (int c : domain) {
      if (c != cell) candidates.push_back(c);
    }
    std::sort(candidates.begin(), candidates.end());
    pc.pls = *std::move(pls);

    absl::StatusOr<PerturbationChannel> channel = PerturbationChannel::Create(
        cell, candidates, grid, pc.sensitivity, pc.epsilon, m);
    if (!channel.ok()) return channel.status();
    std::vector<double> pmf = PfPmf(*channel);
    std::vector<int> outputs = channel->candidates();
    if (plan.keep_floor_) {
      for (int& o : outputs) o = OnLayer(grid, o, cell);
    }
    pc.outputs = Accumulate(outputs, pmf);
    pc.channel = *std::move(channel);
    plan.cells_.push_back(std::move(pc));
  }
  return plan;
}

absl::StatusOr<TrajectorySimulator::State> TrajectorySimulator::Advance(
    const State& state, const StepMechanism& plan, int real,
    std::optional<int> released) const {
  State next{state.t + 1, {}, state.ledger};
  std::vector<double> posterior;
  if (released && !plan.suppressed()) {
    absl::StatusOr<AttackOutcome> attack =
        Attack(state.prior, plan, *released, scenario_->grid);
    if (!attack.ok()) return attack.status();
    posterior = std::move(attack->posterior);
    if (absl::Status s = CheckSimplex(posterior); !s.ok()) {
      return absl::InternalError(
          absl::StrCat("posterior left the simplex at t=", state.t, ": ",
                       s.message()));
    }
    if (absl::Status s = next.ledger.Record(plan.Protecting(real).epsilon);
        !s.ok()) {
      return absl::InternalError(
          absl::StrCat("window bound broken at t=", state.t, ": ",
                       s.message()));
    }
  } else {
    posterior = state.prior;
    next.ledger.RecordSuppressed();
  }
  if (!next.ledger.SatisfiesWindowDp()) {
    return absl::InternalError(
        absl::StrCat("ledger violates the window bound at t=", state.t));
  }
  absl::StatusOr<std::vector<double>> prior =
      AdvancePrior(posterior, scenario_->transitions);
  if (!prior.ok()) return prior.status();
  next.prior = *std::move(prior);
  return next;
}

absl::StatusOr<AttackTrace> RunStrategy(StrategyKind kind,
                                        const Scenario& scenario,
                                        const MechanismParams& params,
                                        std::uint64_t seed) {
  absl::StatusOr<TrajectorySimulator> sim =
      TrajectorySimulator::Create(scenario, kind, params);
  if (!sim.ok()) return sim.status();
  absl::StatusOr<TrajectorySimulator::State> state = sim->Initial();
  if (!state.ok()) return state.status();

  const LocationGrid& grid = scenario.grid;
  Rng rng(seed);
  AttackTrace trace;
  trace.window = params.window;
  trace.eps_window = params.eps_window;

  for (int real : scenario.trajectory) {
    absl::StatusOr<StepMechanism> plan = sim->Plan(*state);
    if (!plan.ok()) {
      return absl::Status(plan.status().code(),
                          absl::StrCat("t=", state->t, ": ",
                                       plan.status().message()));
    }
    StepRecord rec;
    rec.t = state->t;
    rec.real = real;
    rec.prior = state->prior;
    rec.delta_set_size = static_cast<int>(plan->delta_set().members.size());

    std::optional<int> released;
    if (plan->suppressed()) {
      ++trace.suppressed;
      rec.anchor = plan->delta_set().contains(real)
                       ? real
                       : NearestMember(plan->delta_set().members, real, grid,
                                       Metric::k3D);
      rec.posterior = state->prior;
      rec.inferred = OptimalInference(rec.posterior, grid);
      rec.real_to_inferred = grid.d3(real, rec.inferred);
      rec.expected_privacy = rec.real_to_inferred;
    } else {
      const ProtectedCell& pc = plan->Protecting(real);
      rec.anchor = pc.cell;
      rec.epsilon = pc.epsilon;
      rec.pls_diameter = pc.pls ? pc.pls->diameter : 0.0;
      released = plan->Release(real, grid, rng);
      absl::StatusOr<AttackOutcome> attack =
          Attack(state->prior, *plan, *released, grid);
      if (!attack.ok()) return attack.status();
      absl::StatusOr<ExpectedOutcome> expected =
          ExpectedAttack(state->prior, *plan, real, grid);
      if (!expected.ok()) return expected.status();
      rec.released = released;
      rec.posterior = std::move(attack->posterior);
      rec.inferred = attack->inferred;
      rec.real_to_inferred = grid.d3(real, rec.inferred);
      rec.real_to_released = grid.d3(real, *released);
      rec.expected_privacy = expected->privacy;
      rec.expected_qos = expected->qos;
    }

    absl::StatusOr<TrajectorySimulator::State> next =
        sim->Advance(*state, *plan, real, released);
    if (!next.ok()) return next.status();
    state = std::move(next);
    trace.steps.push_back(std::move(rec));
  }
  trace.budget_history = state->ledger.history();
  return trace;
}

}  // namespace geoperturb
