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

#include "geoperturb/pls.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace geoperturb {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Weighted {
  int cell;
  double mass;
};

// min over guesses of sum_k mass_k * d(guess, cell_k), unnormalized.
double MinWeightedDistance(std::span<const Weighted> support,
                           std::span<const int> guesses,
                           const LocationGrid& grid, Metric metric) {
  double best = kInf;
  for (int g : guesses) {
    std::span<const double> row = grid.DistanceRow(metric, g);
    double total = 0.0;
    for (const Weighted& w : support) total += w.mass * row[w.cell];
    best = std::min(best, total);
  }
  return best;
}

// True when every guess scores at least `target` (unnormalized). Scores
// stop accumulating once they pass the target, so far-away guesses cost a
// term or two. `support` should be sorted by mass descending.
bool EveryGuessReaches(std::span<const Weighted> support,
                       std::span<const int> first_guesses,
                       std::span<const int> guesses, double target,
                       const LocationGrid& grid, Metric metric) {
  auto reaches = [&](int g) {
    std::span<const double> row = grid.DistanceRow(metric, g);
    double total = 0.0;
    for (const Weighted& w : support) {
      total += w.mass * row[w.cell];
      if (total >= target) return true;
    }
    return false;
  };
  for (int g : first_guesses) {
    if (!reaches(g)) return false;
  }
  for (int g : guesses) {
    if (!reaches(g)) return false;
  }
  return true;
}

std::vector<int> AllCells(const LocationGrid& grid) {
  std::vector<int> cells(grid.size());
  for (int i = 0; i < grid.size(); ++i) cells[i] = i;
  return cells;
}

// Score of a window, normalized, with the guess range set by `scope`.
double WindowError(std::span<const Weighted> support,
                   std::span<const int> members,
                   std::span<const int> all_cells, const LocationGrid& grid,
                   const PlsOptions& options) {
  double mass = 0.0;
  for (const Weighted& w : support) mass += w.mass;
  const std::span<const int> guesses =
      options.scope == GuessScope::kWholeMap ? all_cells : members;
  return MinWeightedDistance(support, guesses, grid, options.metric) / mass;
}

// Smallest over guesses of the largest distance to a supported cell; an
// upper bound on the conditional error of any set.
double SupportRadius(std::span<const double> prior, const LocationGrid& grid,
                     Metric metric) {
  double best = kInf;
  for (int g = 0; g < grid.size(); ++g) {
    std::span<const double> row = grid.DistanceRow(metric, g);
    double worst = 0.0;
    for (int x = 0; x < grid.size(); ++x) {
      if (prior[x] > 0.0) worst = std::max(worst, row[x]);
    }
    best = std::min(best, worst);
  }
  return best;
}

struct Candidate {
  double diameter = kInf;
  int size = 0;
  int rotation = 0;
  int start = 0;

  bool BetterThan(const Candidate& o) const {
    return std::tie(diameter, size, rotation, start) <
           std::tie(o.diameter, o.size, o.rotation, o.start);
  }
};

}  // namespace

double ProtectionLocationSet::threshold() const {
  return std::exp(epsilon) * e_m;
}

absl::StatusOr<double> ConditionalExpectedError(std::span<const int> members,
                                                std::span<const double> prior,
                                                const LocationGrid& grid,
                                                const PlsOptions& options) {
  if (members.empty()) {
    return absl::InvalidArgumentError("protection set has no members");
  }
  std::vector<Weighted> support;
  for (int m : members) {
    if (!grid.contains(m) || m >= static_cast<int>(prior.size())) {
      return absl::InvalidArgumentError(absl::StrCat("bad member ", m));
    }
    if (prior[m] > 0.0) support.push_back({m, prior[m]});
  }
  if (support.empty()) {
    return absl::InvalidArgumentError(
        "prior puts no mass on the protection set");
  }
  const std::vector<int> all = AllCells(grid);
  return WindowError(support, members, all, grid, options);
}

double Diameter(std::span<const int> members, const LocationGrid& grid,
                Metric metric) {
  double d = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      d = std::max(d, grid.distance(metric, members[i], members[j]));
    }
  }
  return d;
}

absl::StatusOr<ProtectionLocationSet> FindPls(
    int anchor, std::span<const double> prior, double epsilon, double e_m,
    std::span<const HilbertOrder> orders, const LocationGrid& grid,
    const PlsOptions& options) {
  if (!grid.contains(anchor)) {
    return absl::InvalidArgumentError(absl::StrCat("bad anchor ", anchor));
  }
  if (static_cast<int>(prior.size()) != grid.size()) {
    return absl::InvalidArgumentError("prior size does not match the grid");
  }
  if (!(epsilon > 0.0) || !(e_m > 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "epsilon and E_m must be positive, got ", epsilon, " and ", e_m));
  }
  if (orders.empty()) {
    return absl::InvalidArgumentError("no Hilbert orders supplied");
  }
  const Metric metric = options.metric;
  const double threshold = std::exp(epsilon) * e_m;

  const double radius = options.scope == GuessScope::kWholeMap
                            ? SupportRadius(prior, grid, metric)
                            : kInf;
  auto infeasible = [&]() {
    return absl::FailedPreconditionError(absl::StrFormat(
        "no protection set around cell %d reaches exp(eps)*E_m = %.4f m "
        "(eps = %.4f, E_m = %.4f m; no set on this map can exceed %.4f m)",
        anchor, threshold, epsilon, e_m, std::min(radius, grid.MaxDistance())));
  };
  if (threshold > radius || threshold > grid.MaxDistance()) {
    return infeasible();
  }

  const std::vector<int> all = AllCells(grid);
  Candidate best;
  std::vector<Weighted> support;
  std::vector<int> support_cells;
  std::vector<int> window;
  // Keeps `support` sorted by mass descending, `support_cells` in step.
  auto add_support = [&](int cell) {
    const Weighted w{cell, prior[cell]};
    auto it = std::upper_bound(
        support.begin(), support.end(), w,
        [](const Weighted& x, const Weighted& y) { return x.mass > y.mass; });
    support_cells.insert(support_cells.begin() + (it - support.begin()), cell);
    support.insert(it, w);
  };

  for (const HilbertOrder& order : orders) {
    const std::vector<int>& perm = order.permutation;
    const int n = static_cast<int>(perm.size());
    const int a = order.inverse[anchor];
    if (a < 0) continue;
    double base = 0.0;  // diameter of ranks [l, a]
    for (int l = a; l >= 0; --l) {
      for (int k = l + 1; k <= a; ++k) {
        base = std::max(base, grid.distance(metric, perm[l], perm[k]));
      }
      if (base > best.diameter) break;

      double diameter = base;
      support.clear();
      support_cells.clear();
      window.clear();
      for (int k = l; k <= a; ++k) {
        window.push_back(perm[k]);
        if (prior[perm[k]] > 0.0) add_support(perm[k]);
      }
      bool dirty = true;  // support changed since the last check
      bool feasible = false;
      // While no set has been found, `diameter` may lag as a lower bound
      // once it reaches the threshold.
      bool lagging = false;
      auto refresh = [&] {
        if (lagging) diameter = Diameter(window, grid, metric);
        lagging = false;
      };
      for (int r = a; r < n; ++r) {
        if (r > a) {
          const int cell = perm[r];
          if (!lagging) {
            for (int m : window) {
              diameter = std::max(diameter, grid.distance(metric, cell, m));
            }
          }
          window.push_back(cell);
          if (prior[cell] > 0.0) {
            add_support(cell);
            dirty = true;
          }
        }
        if (best.diameter == kInf) {
          lagging = lagging || diameter >= threshold;
        } else {
          refresh();
        }
        if (diameter > best.diameter) break;
        const int size = r - l + 1;
        if (size < 2 || diameter < threshold || support.size() < 2) continue;
        if (dirty) {
          dirty = false;
          double mass = 0.0;
          for (const Weighted& w : support) mass += w.mass;
          const std::span<const int> guesses =
              options.scope == GuessScope::kWholeMap
                  ? std::span<const int>(all)
                  : std::span<const int>(window);
          feasible = EveryGuessReaches(support, support_cells, guesses,
                                       threshold * mass, grid, metric) &&
                     WindowError(support, window, all, grid, options) >=
                         threshold;
        }
        if (!feasible) continue;
        refresh();
        const Candidate here{diameter, size, order.rotation_id, l};
        if (here.BetterThan(best)) best = here;
        break;  // extending further only grows the diameter and size
      }
    }
  }

  if (best.diameter == kInf) return infeasible();

  const HilbertOrder* chosen = nullptr;
  for (const HilbertOrder& o : orders) {
    if (o.rotation_id == best.rotation) chosen = &o;
  }
  ProtectionLocationSet pls;
  pls.members.assign(chosen->permutation.begin() + best.start,
                     chosen->permutation.begin() + best.start + best.size);
  pls.anchor = anchor;
  pls.epsilon = epsilon;
  pls.e_m = e_m;
  pls.rotation_id = best.rotation;
  pls.window_start = best.start;
  pls.diameter = Diameter(pls.members, grid, metric);
  absl::StatusOr<double> err =
      ConditionalExpectedError(pls.members, prior, grid, options);
  if (!err.ok()) return err.status();
  pls.cond_error = *err;

  const bool has_anchor = std::find(pls.members.begin(), pls.members.end(),
                                    anchor) != pls.members.end();
  if (!has_anchor || pls.members.size() < 2 ||
      pls.diameter != best.diameter || pls.cond_error < threshold ||
      pls.diameter < threshold) {
    return absl::InternalError(absl::StrFormat(
        "protection set invariant violated (anchor %d, size %d, D %.6f, "
        "E %.6f, threshold %.6f)",
        anchor, pls.members.size(), pls.diameter, pls.cond_error, threshold));
  }
  return pls;
}

}  // namespace geoperturb
