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

#include "geoperturb/adversary.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace geoperturb {

double ProbabilityOf(const OutputDistribution& dist, int cell) {
  auto it = std::lower_bound(
      dist.begin(), dist.end(), cell,
      [](const std::pair<int, double>& e, int c) { return e.first < c; });
  return it != dist.end() && it->first == cell ? it->second : 0.0;
}

absl::StatusOr<AttackOutcome> Attack(std::span<const double> prior,
                                     const ReleaseModel& model, int released,
                                     const LocationGrid& grid) {
  std::vector<double> likelihood(prior.size(), 0.0);
  for (std::size_t j = 0; j < prior.size(); ++j) {
    if (prior[j] > 0.0) {
      likelihood[j] = model.Likelihood(static_cast<int>(j), released);
    }
  }
  absl::StatusOr<std::vector<double>> posterior =
      BayesPosterior(prior, likelihood);
  if (!posterior.ok()) return posterior.status();
  AttackOutcome out;
  out.inferred = OptimalInference(*posterior, grid, Metric::k3D);
  out.posterior = *std::move(posterior);
  return out;
}

absl::StatusOr<ExpectedOutcome> ExpectedAttack(std::span<const double> prior,
                                               const ReleaseModel& model,
                                               int real,
                                               const LocationGrid& grid) {
  ExpectedOutcome out;
  for (const auto& [cell, prob] : model.Outputs(real)) {
    if (prob <= 0.0) continue;
    absl::StatusOr<AttackOutcome> attack = Attack(prior, model, cell, grid);
    if (!attack.ok()) return attack.status();
    out.privacy += prob * grid.d3(real, attack->inferred);
    out.qos += prob * grid.d3(real, cell);
  }
  return out;
}

Estimate Summarize(std::span<const double> samples) {
  Estimate e;
  e.samples = static_cast<int>(samples.size());
  if (samples.empty()) return e;
  double sum = 0.0;
  for (double v : samples) sum += v;
  e.mean = sum / samples.size();
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / (samples.size() - 1) / samples.size());
  }
  return e;
}

namespace {

template <typename Pick>
absl::StatusOr<Estimate> TraceMetric(std::span<const AttackTrace> traces,
                                     Pick pick, const char* name) {
  if (traces.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot estimate ", name, " from an empty run set"));
  }
  std::vector<double> per_trace;
  for (const AttackTrace& trace : traces) {
    double sum = 0.0;
    int count = 0;
    for (const StepRecord& step : trace.steps) {
      if (std::optional<double> v = pick(step)) {
        sum += *v;
        ++count;
      }
    }
    if (count > 0) per_trace.push_back(sum / count);
  }
  if (per_trace.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("no timestamps contribute to ", name));
  }
  return Summarize(per_trace);
}

}  // namespace

absl::StatusOr<Estimate> TrajectoryPrivacy(std::span<const AttackTrace> traces,
                                           MetricSource source) {
  return TraceMetric(
      traces,
      [source](const StepRecord& s) -> std::optional<double> {
        return source == MetricSource::kConditional ? s.expected_privacy
                                                    : s.real_to_inferred;
      },
      "trajectory privacy");
}

absl::StatusOr<Estimate> QosLoss(std::span<const AttackTrace> traces,
                                 MetricSource source) {
  return TraceMetric(
      traces,
      [source](const StepRecord& s) -> std::optional<double> {
        if (!s.released) return std::nullopt;
        return source == MetricSource::kConditional ? s.expected_qos
                                                    : s.real_to_released;
      },
      "QoS loss");
}

}  // namespace geoperturb
