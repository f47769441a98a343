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

#include "geoperturb/budget.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace geoperturb {
namespace {

bool InUnit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

absl::Status UserProfile::Validate() const {
  if (sojourn.size() != visit_freq.size() ||
      sojourn.size() != semantic.size()) {
    return absl::InvalidArgumentError("per-cell profile vectors differ in size");
  }
  for (std::size_t i = 0; i < sojourn.size(); ++i) {
    if (!InUnit(sojourn[i]) || !InUnit(visit_freq[i])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "sojourn and visit frequency must be normalized to [0, 1] (cell ",
          i, ")"));
    }
    if (!(semantic[i] >= 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative semantic sensitivity at cell ", i));
    }
  }
  if (!InUnit(i_user)) {
    return absl::InvalidArgumentError("i_user must lie in [0, 1]");
  }
  if (lambda_user < 0.0 || alpha_predictability < 0.0 ||
      alpha_sensitivity < 0.0) {
    return absl::InvalidArgumentError("lambda_user and alpha must be >= 0");
  }
  if (gamma_time < 0.0 || gamma_freq < 0.0 || gamma_semantic < 0.0 ||
      std::abs(gamma_time + gamma_freq + gamma_semantic - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        "gamma weights must be nonnegative and sum to 1");
  }
  return absl::OkStatus();
}

UserProfile NeutralProfile(int n) {
  UserProfile p;
  p.sojourn.assign(n, 0.0);
  p.visit_freq.assign(n, 0.0);
  p.semantic.assign(n, 0.0);
  return p;
}

double LocationPredictability(std::span<const double> prior,
                              const LocationGrid& grid, int cell,
                              Metric metric) {
  const double pi = prior[cell];
  if (pi == 0.0) return 1.0;
  std::span<const double> row = grid.DistanceRow(metric, cell);
  double spread = 0.0;
  for (std::size_t j = 0; j < prior.size(); ++j) spread += prior[j] * row[j];
  return 1.0 / (1.0 + pi * spread);
}

double LocationSensitivity(const UserProfile& profile, int cell) {
  const double factor = 1.0 + profile.lambda_user * profile.i_user;
  const double t = profile.gamma_time * profile.sojourn[cell];
  const double f = profile.gamma_freq * profile.visit_freq[cell];
  const double s = profile.gamma_semantic * profile.semantic[cell];
  if (profile.scaling == SensitivityScaling::kWholeSum) {
    return (t + f + s) * factor;
  }
  return t + f + s * factor;
}

bool VerifyWindowDp(std::span<const double> history, int window,
                    double eps_window) {
  double running = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    running += history[i];
    if (i >= static_cast<std::size_t>(window)) running -= history[i - window];
    if (running > eps_window + 1e-12) return false;
  }
  return true;
}

absl::StatusOr<BudgetLedger> BudgetLedger::Create(double eps_total, int window,
                                                  int n_possible,
                                                  double eps_floor) {
  if (!(eps_total > 0.0)) {
    return absl::InvalidArgumentError("total budget must be positive");
  }
  if (window < 1 || n_possible < 1) {
    return absl::InvalidArgumentError(
        "window and possible-location count must be >= 1");
  }
  BudgetLedger ledger;
  ledger.window_ = window;
  ledger.n_possible_ = n_possible;
  ledger.eps_total_ = eps_total;
  ledger.eps_floor_ = eps_floor;
  if (!(eps_floor > 0.0) || eps_floor > ledger.eps_window()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "budget floor ", eps_floor, " must lie in (0, eps_window = ",
        ledger.eps_window(), "]"));
  }
  return ledger;
}

double BudgetLedger::WindowRemaining() const {
  double spent = 0.0;
  const std::size_t tail = std::min<std::size_t>(window_ - 1, history_.size());
  for (std::size_t k = history_.size() - tail; k < history_.size(); ++k) {
    spent += history_[k];
  }
  return std::max(0.0, eps_window() - spent);
}

double BudgetLedger::RawBudget(double lambda_control) const {
  return eps_initial() - lambda_control * delta_eps();
}

absl::StatusOr<double> BudgetLedger::Allocate(const UserProfile& profile,
                                              std::span<const double> prior,
                                              const LocationGrid& grid,
                                              int cell, bool commit,
                                              Metric metric) {
  const double remaining = WindowRemaining();
  if (remaining < eps_floor_) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "window budget exhausted: ", remaining, " left, floor ", eps_floor_));
  }
  const double lambda =
      profile.alpha_predictability *
          LocationPredictability(prior, grid, cell, metric) +
      profile.alpha_sensitivity * LocationSensitivity(profile, cell);
  const double eps = std::clamp(std::min(RawBudget(lambda), remaining),
                                eps_floor_, eps_window());
  if (commit) history_.push_back(eps);
  return eps;
}

absl::Status BudgetLedger::Record(double eps) {
  if (eps < 0.0 || eps > WindowRemaining() + 1e-12) {
    return absl::InvalidArgumentError(absl::StrCat(
        "spend ", eps, " exceeds the window remainder ", WindowRemaining()));
  }
  history_.push_back(eps);
  return absl::OkStatus();
}

}  // namespace geoperturb
