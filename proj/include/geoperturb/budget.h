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

#ifndef GEOPERTURB_BUDGET_H_
#define GEOPERTURB_BUDGET_H_

#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "geoperturb/grid.h"

namespace geoperturb {

// Which part of the location-sensitivity sum the user-characteristic factor
// (1 + lambda_user * i_user) scales.
enum class SensitivityScaling { kSemanticTerm, kWholeSum };

// Per-user inputs to location sensitivity and the budget control
// coefficient. Per-cell vectors are indexed by grid cell.
struct UserProfile {
  std::vector<double> sojourn;     // T_i in [0, 1]
  std::vector<double> visit_freq;  // F_i in [0, 1]
  std::vector<double> semantic;    // Sen_i >= 0
  double i_user = 0.0;             // in [0, 1]
  double lambda_user = 0.0;        // weight of i_user
  double gamma_time = 1.0 / 3;
  double gamma_freq = 1.0 / 3;
  double gamma_semantic = 1.0 / 3;
  double alpha_predictability = 0.0;
  double alpha_sensitivity = 0.0;
  SensitivityScaling scaling = SensitivityScaling::kSemanticTerm;

  absl::Status Validate() const;
};

// A profile with all per-cell inputs zero, for n cells.
UserProfile NeutralProfile(int n);

// LP = 1 / (1 + sum_j prior_i * prior_j * d(i, j)), in (0, 1].
double LocationPredictability(std::span<const double> prior,
                              const LocationGrid& grid, int cell,
                              Metric metric = Metric::k3D);

// LS = g_t T_i + g_f F_i + g_s Sen_i (1 + lambda_user i_user), or the whole
// sum scaled when profile.scaling is kWholeSum.
double LocationSensitivity(const UserProfile& profile, int cell);

// Returns whether every length-`window` run of `history` sums to at most
// `eps_window` (plus a 1e-12 rounding slack).
bool VerifyWindowDp(std::span<const double> history, int window,
                    double eps_window);

// Sliding-window record of the budgets spent on the real location, one
// entry per timestamp. Allocation keeps every length-w run of spends within
// eps_window. A suppressed query records 0.
class BudgetLedger {
 public:
  static constexpr double kDefaultFloor = 0.01;

  // eps_total is the budget for all n possible locations over one window.
  static absl::StatusOr<BudgetLedger> Create(double eps_total, int window,
                                             int n_possible,
                                             double eps_floor = kDefaultFloor);

  int window() const { return window_; }
  int n_possible() const { return n_possible_; }
  double eps_total() const { return eps_total_; }
  double eps_window() const { return eps_total_ / n_possible_; }
  double eps_initial() const { return eps_total_ / (window_ * n_possible_); }
  double delta_eps() const { return eps_total_ / 2; }
  double eps_floor() const { return eps_floor_; }
  const std::vector<double>& history() const { return history_; }

  // eps_window minus the last w - 1 recorded spends, clamped at 0.
  double WindowRemaining() const;

  // Budget for `cell` at the current timestamp:
  //   lambda = a1 * LP + a2 * LS, raw = eps_initial - lambda * delta_eps,
  //   result = clamp(min(raw, remaining), eps_floor, eps_window).
  // ResourceExhausted when the window has less than eps_floor left. With
  // `commit` the result is appended to the history (use for the real
  // location only).
  absl::StatusOr<double> Allocate(const UserProfile& profile,
                                  std::span<const double> prior,
                                  const LocationGrid& grid, int cell,
                                  bool commit, Metric metric = Metric::k3D);

  // The pre-clamp value eps_initial - lambda * delta_eps.
  double RawBudget(double lambda_control) const;

  void RecordSuppressed() { history_.push_back(0.0); }
  // Appends a spend computed elsewhere; rejects values that would break the
  // window bound.
  absl::Status Record(double eps);

  bool SatisfiesWindowDp() const {
    return VerifyWindowDp(history_, window_, eps_window());
  }

 private:
  BudgetLedger() = default;

  int window_ = 1;
  int n_possible_ = 1;
  double eps_total_ = 0.0;
  double eps_floor_ = kDefaultFloor;
  std::vector<double> history_;
};

}  // namespace geoperturb

#endif  // GEOPERTURB_BUDGET_H_
