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

#include "geoperturb/mechanism.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "gsl/gsl_integration.h"

namespace geoperturb {
namespace {

struct GlTableDeleter {
  void operator()(gsl_integration_glfixed_table* t) const {
    gsl_integration_glfixed_table_free(t);
  }
};

std::vector<double> Normalize(std::vector<double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

absl::StatusOr<PerturbationChannel> PerturbationChannel::Create(
    int anchor, std::vector<int> candidates, const LocationGrid& grid,
    double sensitivity, double epsilon, Metric metric) {
  if (!grid.contains(anchor)) {
    return absl::InvalidArgumentError(absl::StrCat("bad anchor ", anchor));
  }
  std::vector<double> distances;
  distances.reserve(candidates.size());
  for (int c : candidates) {
    if (!grid.contains(c)) {
      return absl::InvalidArgumentError(absl::StrCat("bad candidate ", c));
    }
    distances.push_back(grid.distance(metric, anchor, c));
  }
  return FromDistances(anchor, std::move(candidates), std::move(distances),
                       sensitivity, epsilon);
}

absl::StatusOr<PerturbationChannel> PerturbationChannel::FromDistances(
    int anchor, std::vector<int> candidates, std::vector<double> distances,
    double sensitivity, double epsilon) {
  if (candidates.empty()) {
    return absl::InvalidArgumentError("channel needs at least one candidate");
  }
  if (candidates.size() != distances.size()) {
    return absl::InvalidArgumentError("one distance per candidate expected");
  }
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    return absl::InvalidArgumentError("duplicate candidate");
  }
  if (std::binary_search(sorted.begin(), sorted.end(), anchor)) {
    return absl::InvalidArgumentError(
        "the protected cell cannot be its own release candidate");
  }
  if (!(sensitivity > 0.0)) {
    return absl::InvalidArgumentError("sensitivity must be positive");
  }
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("epsilon must be nonnegative");
  }
  PerturbationChannel ch;
  ch.anchor_ = anchor;
  ch.candidates_ = std::move(candidates);
  ch.distances_ = std::move(distances);
  ch.sensitivity_ = sensitivity;
  ch.epsilon_ = epsilon;
  ch.u_star_ = -*std::min_element(ch.distances_.begin(), ch.distances_.end());
  ch.acceptance_.reserve(ch.distances_.size());
  for (double d : ch.distances_) {
    const double gap = -d - ch.u_star_;  // <= 0 by construction
    const double p = std::exp(epsilon * gap / (2.0 * sensitivity));
    ch.acceptance_.push_back(std::clamp(p, 0.0, 1.0));
  }
  return ch;
}

int PfSample(const PerturbationChannel& channel, Rng& rng) {
  const std::vector<double>& accept = channel.acceptance();
  const int n = channel.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  // Lazy Fisher-Yates: the permutation is drawn only as far as it is read.
  // The scan always stops, since the top-utility candidate accepts with
  // probability 1.
  for (int pos = 0;; ++pos) {
    const int pick =
        std::uniform_int_distribution<int>(pos, n - 1)(rng);
    std::swap(order[pos], order[pick]);
    const int k = order[pos];
    if (accept[k] >= 1.0 || coin(rng) < accept[k]) {
      return channel.candidates()[k];
    }
  }
}

absl::StatusOr<std::vector<double>> PfExactPmf(
    const PerturbationChannel& channel) {
  const int n = channel.size();
  if (n > kMaxEnumerableCandidates) {
    return absl::InvalidArgumentError(
        absl::StrCat(n, " candidates is too many to enumerate (max ",
                     kMaxEnumerableCandidates, ")"));
  }
  const std::vector<double>& accept = channel.acceptance();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> pmf(n, 0.0);
  double orderings = 0.0;
  do {
    orderings += 1.0;
    double all_rejected = 1.0;
    for (int k : order) {
      pmf[k] += all_rejected * accept[k];
      all_rejected *= 1.0 - accept[k];
    }
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& p : pmf) p /= orderings;
  return pmf;
}

std::vector<double> PfPmf(const PerturbationChannel& channel) {
  const int n = channel.size();
  const std::vector<double>& accept = channel.acceptance();
  if (n == 1) return {1.0};
  // Degree n - 1 integrand; m nodes are exact up to degree 2m - 1.
  const std::size_t nodes = static_cast<std::size_t>(n / 2 + 1);
  std::unique_ptr<gsl_integration_glfixed_table, GlTableDeleter> table(
      gsl_integration_glfixed_table_alloc(nodes));
  std::vector<double> t(nodes), w(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    gsl_integration_glfixed_point(0.0, 1.0, i, &t[i], &w[i], table.get());
  }
  std::vector<double> pmf(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double integral = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      double prod = 1.0;
      for (int j = 0; j < n; ++j) {
        if (j != k) prod *= 1.0 - t[i] * accept[j];
      }
      integral += w[i] * prod;
    }
    pmf[k] = accept[k] * integral;
  }
  return Normalize(std::move(pmf));
}

double PfTailBound(double diameter, double epsilon, int n_chi, int n_phi,
                   double psi, double max_d) {
  return (2.0 * diameter / epsilon) *
         (std::log(static_cast<double>(n_chi)) - epsilon / 2.0 -
          std::log(static_cast<double>(n_phi)) - std::log(psi) - max_d);
}

absl::StatusOr<std::vector<double>> ExpMechPmf(int anchor,
                                               std::span<const int> candidates,
                                               double epsilon,
                                               double sensitivity,
                                               const LocationGrid& grid,
                                               Metric metric) {
  if (candidates.empty()) {
    return absl::InvalidArgumentError("exponential mechanism needs candidates");
  }
  if (!(sensitivity > 0.0) || !(epsilon >= 0.0)) {
    return absl::InvalidArgumentError(
        "exponential mechanism needs sensitivity > 0 and epsilon >= 0");
  }
  if (!grid.contains(anchor)) {
    return absl::InvalidArgumentError(absl::StrCat("bad anchor ", anchor));
  }
  // Shift by the best utility so the largest weight is exactly 1.
  double d_min = grid.distance(metric, anchor, candidates[0]);
  for (int c : candidates) d_min = std::min(d_min, grid.distance(metric, anchor, c));
  std::vector<double> w;
  w.reserve(candidates.size());
  for (int c : candidates) {
    const double d = grid.distance(metric, anchor, c);
    w.push_back(std::exp(-epsilon * (d - d_min) / (2.0 * sensitivity)));
  }
  return Normalize(std::move(w));
}

absl::StatusOr<int> ExpMechSample(int anchor, std::span<const int> candidates,
                                  double epsilon, double sensitivity,
                                  const LocationGrid& grid, Rng& rng,
                                  Metric metric) {
  absl::StatusOr<std::vector<double>> pmf =
      ExpMechPmf(anchor, candidates, epsilon, sensitivity, grid, metric);
  if (!pmf.ok()) return pmf.status();
  std::discrete_distribution<int> pick(pmf->begin(), pmf->end());
  return candidates[pick(rng)];
}

}  // namespace geoperturb
