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

#include "geoperturb/mobility.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace geoperturb {

absl::Status CheckSimplex(std::span<const double> p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat("probability ", i, " is ", p[i]));
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("probabilities sum to ", total, ", not 1"));
  }
  return absl::OkStatus();
}

absl::StatusOr<TransitionMatrix> TransitionMatrix::FromDense(
    int n, std::vector<double> m) {
  if (n <= 0 || m.size() != static_cast<std::size_t>(n) * n) {
    return absl::InvalidArgumentError("transition matrix must be n x n");
  }
  for (int i = 0; i < n; ++i) {
    std::span<const double> row(m.data() + static_cast<std::size_t>(i) * n,
                                n);
    if (absl::Status s = CheckSimplex(row); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("transition row ", i, ": ", s.message()));
    }
  }
  return TransitionMatrix(n, std::move(m));
}

absl::StatusOr<TransitionMatrix> EstimateTransitionMatrix(
    const CountMatrix& counts, const Reachability& reachability) {
  const int n = counts.n;
  if (reachability.n != n) {
    return absl::InvalidArgumentError(
        "count and reachability matrices differ in size");
  }
  std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    std::int64_t total = 0;
    for (int j = 0; j < n; ++j) {
      const std::int64_t c = counts.at(i, j);
      if (c < 0) {
        return absl::InvalidArgumentError(
            absl::StrCat("negative count ", c, " at (", i, ", ", j, ")"));
      }
      if (c > 0 && !reachability.at(i, j)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "count ", c, " on unreachable pair (", i, ", ", j, ")"));
      }
      total += c;
    }
    double* row = m.data() + static_cast<std::size_t>(i) * n;
    if (total == 0) {
      row[i] = 1.0;
      continue;
    }
    for (int j = 0; j < n; ++j) {
      row[j] = static_cast<double>(counts.at(i, j)) / static_cast<double>(total);
    }
  }
  return TransitionMatrix::FromDense(n, std::move(m));
}

absl::StatusOr<CountMatrix> ReadCountsCsv(std::istream& in, int n) {
  CountMatrix counts(n);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    absl::string_view view = absl::StripAsciiWhitespace(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<absl::string_view> fields = absl::StrSplit(view, ',');
    int row = 0, col = 0;
    std::int64_t count = 0;
    const bool parsed =
        fields.size() == 3 &&
        absl::SimpleAtoi(absl::StripAsciiWhitespace(fields[0]), &row) &&
        absl::SimpleAtoi(absl::StripAsciiWhitespace(fields[1]), &col) &&
        absl::SimpleAtoi(absl::StripAsciiWhitespace(fields[2]), &count);
    if (!parsed) {
      if (line_no == 1) continue;  // header
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected row,col,count"));
    }
    if (row < 0 || row >= n || col < 0 || col >= n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": cell index outside [0, ", n, ")"));
    }
    if (count < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": negative count"));
    }
    counts.at(row, col) += count;
  }
  return counts;
}

absl::StatusOr<std::vector<double>> AdvancePrior(
    std::span<const double> posterior, const TransitionMatrix& m) {
  if (static_cast<int>(posterior.size()) != m.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "posterior has ", posterior.size(), " entries, matrix is ", m.size()));
  }
  std::vector<double> prior(posterior.size(), 0.0);
  for (int i = 0; i < m.size(); ++i) {
    const double w = posterior[i];
    if (w == 0.0) continue;
    std::span<const double> row = m.row(i);
    for (int j = 0; j < m.size(); ++j) prior[j] += w * row[j];
  }
  return prior;
}

absl::StatusOr<std::vector<double>> BayesPosterior(
    std::span<const double> prior, std::span<const double> likelihood) {
  if (prior.size() != likelihood.size()) {
    return absl::InvalidArgumentError("prior and likelihood differ in size");
  }
  std::vector<double> posterior(prior.size());
  double total = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (likelihood[i] < 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative likelihood at ", i));
    }
    posterior[i] = prior[i] * likelihood[i];
    total += posterior[i];
  }
  if (!(total > 0.0)) {
    return absl::FailedPreconditionError(
        "observation has zero probability under the prior");
  }
  for (double& p : posterior) p /= total;
  return posterior;
}

bool PossibleLocationSet::contains(int cell) const {
  return std::binary_search(members.begin(), members.end(), cell);
}

int PossibleLocationSet::anchor(int real) const {
  if (contains(real)) return real;
  return surrogate.value_or(real);
}

int NearestMember(std::span<const int> members, int cell,
                  const LocationGrid& grid, Metric metric) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int m : members) {
    const double d = grid.distance(metric, cell, m);
    if (d < best_d || (d == best_d && m < best)) {
      best = m;
      best_d = d;
    }
  }
  return best;
}

absl::StatusOr<PossibleLocationSet> DeltaLocationSet(
    std::span<const double> prior, double delta, int real,
    const LocationGrid& grid, Metric metric) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  if (static_cast<int>(prior.size()) != grid.size()) {
    return absl::InvalidArgumentError("prior size does not match the grid");
  }
  if (!grid.contains(real)) {
    return absl::InvalidArgumentError(
        absl::StrCat("real location ", real, " is not a grid cell"));
  }
  if (absl::Status s = CheckSimplex(prior); !s.ok()) return s;

  std::vector<int> order(prior.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return prior[a] > prior[b]; });

  // Slack absorbs the rounding of a prior that sums to 1 within tolerance.
  const double target = (1.0 - delta) - 1e-12;
  PossibleLocationSet out;
  out.delta = delta;
  for (int cell : order) {
    if (out.mass >= target) break;
    if (prior[cell] <= 0.0) break;
    out.members.push_back(cell);
    out.mass += prior[cell];
  }
  if (out.mass < target) {
    return absl::InternalError("delta-location set failed to reach 1 - delta");
  }
  // Minimality: the prefix without its last (smallest) member falls short.
  if (out.mass - prior[out.members.back()] >= target) {
    return absl::InternalError("delta-location set is not minimal");
  }
  std::sort(out.members.begin(), out.members.end());
  if (!out.contains(real)) {
    out.surrogate = NearestMember(out.members, real, grid, metric);
  }
  return out;
}

Inference InferLocation(std::span<const double> posterior,
                        const LocationGrid& grid, Metric metric) {
  std::vector<int> support;
  for (int i = 0; i < static_cast<int>(posterior.size()); ++i) {
    if (posterior[i] > 0.0) support.push_back(i);
  }
  Inference best{0, std::numeric_limits<double>::infinity()};
  for (int guess = 0; guess < grid.size(); ++guess) {
    std::span<const double> row = grid.DistanceRow(metric, guess);
    double err = 0.0;
    for (int x : support) err += posterior[x] * row[x];
    if (err < best.expected_error * (1.0 - 1e-12)) best = {guess, err};
  }
  return best;
}

}  // namespace geoperturb
