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

#include "geoperturb/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <tuple>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "geoperturb/mechanism.h"

namespace geoperturb::oracle {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double NaiveDiameter(const std::vector<int>& members, const LocationGrid& grid,
                     Metric metric) {
  double d = 0.0;
  for (int a : members) {
    for (int b : members) d = std::max(d, grid.distance(metric, a, b));
  }
  return d;
}

// Ordering shared by both PLS oracles: diameter, size, then the tiebreak.
template <typename Tie>
bool Better(const PlsCandidate& x, const Tie& tx, const PlsCandidate& y,
            const Tie& ty) {
  return std::tie(x.diameter, tx) < std::tie(y.diameter, ty);
}

}  // namespace

double NaiveConditionalError(std::span<const int> members,
                             std::span<const double> prior,
                             const LocationGrid& grid,
                             const PlsOptions& options) {
  double mass = 0.0;
  for (int m : members) mass += prior[m];
  std::vector<int> guesses;
  if (options.scope == GuessScope::kWholeMap) {
    for (int g = 0; g < grid.size(); ++g) guesses.push_back(g);
  } else {
    guesses.assign(members.begin(), members.end());
  }
  double best = kInf;
  for (int g : guesses) {
    double e = 0.0;
    for (int m : members) {
      e += prior[m] / mass * grid.distance(options.metric, g, m);
    }
    best = std::min(best, e);
  }
  return best;
}

absl::StatusOr<PlsCandidate> BestSubsetPls(int anchor,
                                           std::span<const double> prior,
                                           double epsilon, double e_m,
                                           const LocationGrid& grid,
                                           const PlsOptions& options) {
  const int n = grid.size();
  if (n > kMaxSubsetCells) {
    return absl::InvalidArgumentError(absl::StrCat(
        "subset oracle handles at most ", kMaxSubsetCells, " cells, got ", n));
  }
  const double threshold = std::exp(epsilon) * e_m;
  std::optional<PlsCandidate> best;
  std::tuple<std::size_t, std::vector<int>> best_tie;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (!(mask & (1u << anchor)) || __builtin_popcount(mask) < 2) continue;
    PlsCandidate c;
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        c.members.push_back(i);
        mass += prior[i];
      }
    }
    if (!(mass > 0.0)) continue;
    c.diameter = NaiveDiameter(c.members, grid, options.metric);
    if (best && c.diameter > best->diameter) continue;
    c.cond_error = NaiveConditionalError(c.members, prior, grid, options);
    if (c.cond_error < threshold || c.diameter < threshold) continue;
    std::tuple<std::size_t, std::vector<int>> tie{c.members.size(), c.members};
    if (!best || Better(c, tie, *best, best_tie)) {
      best = c;
      best_tie = tie;
    }
  }
  if (!best) {
    return absl::FailedPreconditionError("no subset reaches the threshold");
  }
  return *best;
}

absl::StatusOr<PlsCandidate> BestWindowPls(int anchor,
                                           std::span<const double> prior,
                                           double epsilon, double e_m,
                                           std::span<const HilbertOrder> orders,
                                           const LocationGrid& grid,
                                           const PlsOptions& options) {
  const double threshold = std::exp(epsilon) * e_m;
  std::optional<PlsCandidate> best;
  std::tuple<std::size_t, int, int> best_tie;
  for (const HilbertOrder& order : orders) {
    const int n = static_cast<int>(order.permutation.size());
    for (int l = 0; l < n; ++l) {
      for (int r = l + 1; r < n; ++r) {
        std::vector<int> window(order.permutation.begin() + l,
                                order.permutation.begin() + r + 1);
        if (std::find(window.begin(), window.end(), anchor) == window.end()) {
          continue;
        }
        double mass = 0.0;
        for (int m : window) mass += prior[m];
        if (!(mass > 0.0)) continue;
        PlsCandidate c;
        c.diameter = NaiveDiameter(window, grid, options.metric);
        c.cond_error = NaiveConditionalError(window, prior, grid, options);
        if (c.cond_error < threshold || c.diameter < threshold) continue;
        c.members = window;
        std::sort(c.members.begin(), c.members.end());
        std::tuple<std::size_t, int, int> tie{window.size(), order.rotation_id,
                                              l};
        if (!best || Better(c, tie, *best, best_tie)) {
          best = c;
          best_tie = tie;
        }
      }
    }
  }
  if (!best) {
    return absl::FailedPreconditionError("no window reaches the threshold");
  }
  return *best;
}

namespace {

// Output distribution of one protected cell, recomputed from the plan's
// primitives without the production closed form.
absl::StatusOr<std::map<int, double>> RecomputeOutputs(
    const ProtectedCell& pc, const LocationGrid& grid, bool keep_floor) {
  std::map<int, double> out;
  if (pc.channel) {
    absl::StatusOr<std::vector<double>> pmf = PfExactPmf(*pc.channel);
    if (!pmf.ok()) return pmf.status();
    for (int k = 0; k < pc.channel->size(); ++k) {
      int cell = pc.channel->candidates()[k];
      if (keep_floor) {
        Lattice l = grid.lattice(cell);
        l.z = grid.lattice(pc.cell).z;
        cell = grid.IndexOf(l);
      }
      out[cell] += (*pmf)[k];
    }
  } else if (!pc.exp_candidates.empty()) {
    double z = 0.0;
    for (int c : pc.exp_candidates) {
      z += std::exp(-pc.epsilon * grid.d3(pc.cell, c) /
                    (2.0 * pc.sensitivity));
    }
    for (int c : pc.exp_candidates) {
      out[c] += std::exp(-pc.epsilon * grid.d3(pc.cell, c) /
                         (2.0 * pc.sensitivity)) /
                z;
    }
  } else {
    out[pc.cell] = 1.0;
  }
  return out;
}

struct Explorer {
  const TrajectorySimulator& sim;
  const Scenario& scenario;
  const LocationGrid& grid;
  bool keep_floor;
  // Per step along the current branch: each cell's output distribution, or
  // nullopt when the step was suppressed.
  std::vector<std::optional<std::vector<std::map<int, double>>>> channels;
  std::vector<std::optional<int>> releases;
  double p_sum = 0.0;
  double q_sum = 0.0;
  double q_weight = 0.0;
  int branches = 0;

  // Posterior over x_t given all releases so far, from the joint table
  // over every hidden path x_0..x_t.
  std::vector<double> JointPosterior() const {
    const int n = grid.size();
    const int steps = static_cast<int>(releases.size());
    std::vector<double> post(n, 0.0);
    std::vector<int> path(steps, 0);
    for (;;) {
      double w = scenario.initial_prior[path[0]];
      for (int k = 1; k < steps && w > 0.0; ++k) {
        w *= scenario.transitions.at(path[k - 1], path[k]);
      }
      for (int k = 0; k < steps && w > 0.0; ++k) {
        if (!releases[k]) continue;
        const auto& dist = (*channels[k])[path[k]];
        auto it = dist.find(*releases[k]);
        w *= it == dist.end() ? 0.0 : it->second;
      }
      post[path[steps - 1]] += w;
      int k = steps - 1;
      while (k >= 0 && ++path[k] == n) path[k--] = 0;
      if (k < 0) break;
    }
    double z = 0.0;
    for (double v : post) z += v;
    for (double& v : post) v /= z;
    return post;
  }

  int Guess(const std::vector<double>& post) const {
    int best = 0;
    double best_e = kInf;
    for (int g = 0; g < grid.size(); ++g) {
      double e = 0.0;
      for (int x = 0; x < grid.size(); ++x) e += post[x] * grid.d3(g, x);
      if (g == 0 || e < best_e - 1e-12 * std::max(1.0, best_e)) {
        best_e = e;
        best = g;
      }
    }
    return best;
  }

  absl::Status Walk(const TrajectorySimulator::State& state, double weight,
                    double p_acc, double q_acc, int released) {
    const int t = state.t;
    const std::vector<int>& traj = scenario.trajectory;
    if (t == static_cast<int>(traj.size())) {
      ++branches;
      p_sum += weight * p_acc / traj.size();
      if (released > 0) {
        q_sum += weight * q_acc / released;
        q_weight += weight;
      }
      return absl::OkStatus();
    }
    const int real = traj[t];
    absl::StatusOr<StepMechanism> plan = sim.Plan(state);
    if (!plan.ok()) return plan.status();

    if (plan->suppressed()) {
      channels.push_back(std::nullopt);
      releases.push_back(std::nullopt);
      int guess = Guess(JointPosterior());
      absl::StatusOr<TrajectorySimulator::State> next =
          sim.Advance(state, *plan, real, std::nullopt);
      if (!next.ok()) return next.status();
      absl::Status s = Walk(*next, weight, p_acc + grid.d3(real, guess),
                            q_acc, released);
      channels.pop_back();
      releases.pop_back();
      return s;
    }

    std::vector<std::map<int, double>> dists(grid.size());
    for (int c = 0; c < grid.size(); ++c) {
      absl::StatusOr<std::map<int, double>> d =
          RecomputeOutputs(plan->Protecting(c), grid, keep_floor);
      if (!d.ok()) return d.status();
      dists[c] = *std::move(d);
    }
    const std::map<int, double> mine = dists[real];
    channels.push_back(std::move(dists));
    for (const auto& [out, prob] : mine) {
      if (prob <= 0.0) continue;
      releases.push_back(out);
      int guess = Guess(JointPosterior());
      absl::StatusOr<TrajectorySimulator::State> next =
          sim.Advance(state, *plan, real, out);
      if (!next.ok()) return next.status();
      absl::Status s =
          Walk(*next, weight * prob, p_acc + grid.d3(real, guess),
               q_acc + grid.d3(real, out), released + 1);
      releases.pop_back();
      if (!s.ok()) return s;
    }
    channels.pop_back();
    return absl::OkStatus();
  }
};

}  // namespace

absl::StatusOr<ExactMetrics> ExactTraceMetrics(StrategyKind kind,
                                               const Scenario& scenario,
                                               const MechanismParams& params) {
  if (scenario.trajectory.empty()) {
    return absl::InvalidArgumentError("empty trajectory");
  }
  if (scenario.grid.size() > kMaxSubsetCells) {
    return absl::InvalidArgumentError(
        absl::StrCat("joint-table oracle handles at most ", kMaxSubsetCells,
                     " cells"));
  }
  absl::StatusOr<TrajectorySimulator> sim =
      TrajectorySimulator::Create(scenario, kind, params);
  if (!sim.ok()) return sim.status();
  absl::StatusOr<TrajectorySimulator::State> state = sim->Initial();
  if (!state.ok()) return state.status();
  Explorer ex{*sim, scenario, scenario.grid, kind == StrategyKind::k2dptppm,
              {}, {}};
  if (absl::Status s = ex.Walk(*state, 1.0, 0.0, 0.0, 0); !s.ok()) return s;
  ExactMetrics m;
  m.p = ex.p_sum;
  m.q = ex.q_weight > 0.0 ? ex.q_sum / ex.q_weight : 0.0;
  m.branches = ex.branches;
  return m;
}

}  // namespace geoperturb::oracle
