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

// Command-line front end: sweep, validate, oracle and demo.

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "geoperturb/baselines.h"
#include "geoperturb/experiment.h"
#include "geoperturb/mechanism.h"
#include "geoperturb/oracle.h"

namespace {

using geoperturb::ExperimentConfig;

struct Overrides {
  std::string config_path;
  std::vector<double> eps_w;
  std::vector<double> e_m;
  std::vector<int> window;
  std::vector<double> delta;
  std::string seeds;
  std::vector<std::string> strategies;
  std::string out;
  std::string manifest;
  std::optional<int> threads;
  bool single_window = false;
};

void AddOverrideFlags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config");
  cmd->add_option("--eps-w", o.eps_w, "window budgets, comma separated")
      ->delimiter(',');
  cmd->add_option("--em", o.e_m, "E_m values in meters, comma separated")
      ->delimiter(',');
  cmd->add_option("--w", o.window, "window lengths, comma separated")
      ->delimiter(',');
  cmd->add_option("--delta", o.delta, "delta values, comma separated")
      ->delimiter(',');
  cmd->add_option("--seeds", o.seeds,
                  "seed count (e.g. 20) or explicit list (e.g. 3,5,8)");
  cmd->add_option("--strategy", o.strategies,
                  "3DSTPM, 3DPIM, P3DLPPM, 2DPTPPM; comma separated")
      ->delimiter(',');
  cmd->add_option("--out", o.out, "CSV output path");
  cmd->add_option("--manifest", o.manifest, "JSON manifest output path");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--single-window", o.single_window,
                "allow w >= trajectory length");
}

absl::StatusOr<ExperimentConfig> BuildConfig(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) {
    absl::StatusOr<ExperimentConfig> loaded =
        geoperturb::LoadConfig(o.config_path);
    if (!loaded.ok()) return loaded.status();
    c = *std::move(loaded);
  }
  if (absl::Status s = geoperturb::ApplySeedEnvironment(c); !s.ok()) return s;
  if (!o.eps_w.empty()) c.eps_w = o.eps_w;
  if (!o.e_m.empty()) c.e_m = o.e_m;
  if (!o.window.empty()) c.window = o.window;
  if (!o.delta.empty()) c.delta = o.delta;
  if (!o.seeds.empty()) {
    std::vector<std::string> parts = absl::StrSplit(o.seeds, ',');
    std::vector<std::uint64_t> seeds;
    for (const std::string& p : parts) {
      std::uint64_t v = 0;
      if (!absl::SimpleAtoi(p, &v)) {
        return absl::InvalidArgumentError(
            absl::StrCat("--seeds: '", p, "' is not an unsigned integer"));
      }
      seeds.push_back(v);
    }
    if (seeds.size() == 1) {
      c.seed_count = static_cast<int>(seeds[0]);
      c.seeds.clear();
    } else {
      c.seeds = seeds;
    }
  }
  if (!o.strategies.empty()) {
    c.strategies.clear();
    for (const std::string& name : o.strategies) {
      absl::StatusOr<geoperturb::StrategyKind> k =
          geoperturb::ParseStrategy(name);
      if (!k.ok()) return k.status();
      c.strategies.push_back(*k);
    }
  }
  if (!o.out.empty()) c.output = o.out;
  if (!o.manifest.empty()) c.manifest = o.manifest;
  if (o.threads) c.threads = *o.threads;
  if (o.single_window) c.single_window = true;
  if (absl::Status s = geoperturb::ValidateConfig(c); !s.ok()) return s;
  return c;
}

int Fail(const absl::Status& s) {
  std::cerr << "error: " << s << "\n";
  return 1;
}

int RunSweepCommand(const Overrides& o) {
  absl::StatusOr<ExperimentConfig> c = BuildConfig(o);
  if (!c.ok()) return Fail(c.status());
  absl::StatusOr<std::unique_ptr<geoperturb::CsvWriter>> writer =
      geoperturb::CsvWriter::Open(c->output);
  if (!writer.ok()) return Fail(writer.status());
  int flagged = 0;
  absl::StatusOr<std::vector<geoperturb::ResultRow>> rows =
      geoperturb::RunSweep(*c, [&](const geoperturb::ResultRow& row) {
        if (row.status != "ok") ++flagged;
        return (*writer)->Append(row);
      });
  if (!rows.ok()) return Fail(rows.status());
  if (absl::Status s = (*writer)->Close(); !s.ok()) return Fail(s);
  if (!c->manifest.empty()) {
    if (absl::Status s = geoperturb::WriteManifest(*c, c->manifest); !s.ok()) {
      return Fail(s);
    }
  }
  std::cout << absl::StrFormat("wrote %d rows to %s (%d flagged)\n",
                               rows->size(), c->output, flagged);
  return 0;
}

int RunValidateCommand(const Overrides& o) {
  absl::StatusOr<ExperimentConfig> c = BuildConfig(o);
  if (!c.ok()) return Fail(c.status());
  const std::size_t points =
      c->eps_w.size() * c->e_m.size() * c->window.size() * c->delta.size();
  std::cout << absl::StrFormat(
      "config ok: %d sweep points x %d strategies x %d seeds = %d rows\n",
      points, c->strategies.size(), c->SeedList().size(),
      points * c->strategies.size() * c->SeedList().size());
  return 0;
}

int RunDemoCommand(const Overrides& o, std::uint64_t seed) {
  absl::StatusOr<ExperimentConfig> c = BuildConfig(o);
  if (!c.ok()) return Fail(c.status());
  absl::StatusOr<geoperturb::Scenario> scenario =
      geoperturb::GenerateScenario(*c, seed);
  if (!scenario.ok()) return Fail(scenario.status());
  std::cout << absl::StrFormat("scenario digest %016x, trajectory [%s]\n",
                               geoperturb::ScenarioDigest(*scenario),
                               absl::StrJoin(scenario->trajectory, ", "));
  for (geoperturb::StrategyKind kind : c->strategies) {
    geoperturb::MechanismParams params = geoperturb::ParamsFor(
        *c, c->eps_w[0], c->e_m[0], c->window[0], c->delta[0]);
    absl::StatusOr<geoperturb::AttackTrace> trace =
        geoperturb::RunStrategy(kind, *scenario, params, seed);
    std::cout << "\n" << geoperturb::StrategyName(kind) << "\n";
    if (!trace.ok()) {
      std::cout << "  failed: " << trace.status() << "\n";
      continue;
    }
    const geoperturb::LocationGrid& grid = scenario->grid;
    for (const geoperturb::StepRecord& s : trace->steps) {
      auto at = [&](int cell) {
        const geoperturb::Lattice& l = grid.lattice(cell);
        return absl::StrFormat("%d(%d,%d,%d)", cell, l.x, l.y, l.z);
      };
      std::cout << absl::StrFormat(
          "  t=%d real=%s released=%s inferred=%s |chi|=%d eps=%.4f D=%.3f "
          "E[d(x,x^)]=%.3f E[d(x,x')]=%.3f\n",
          s.t, at(s.real), s.released ? at(*s.released) : "suppressed",
          at(s.inferred), s.delta_set_size, s.epsilon, s.pls_diameter,
          s.expected_privacy, s.expected_qos);
    }
    geoperturb::ResultRow row = geoperturb::RowFromTrace(*trace);
    std::cout << absl::StrFormat(
        "  p=%.4f m  q=%.4f m  suppressed=%d  budgets [%s]  window-dp %s\n",
        row.p, row.q, row.suppressed,
        absl::StrJoin(trace->budget_history, ", ",
                      [](std::string* out, double v) {
                        absl::StrAppend(out, absl::StrFormat("%.4f", v));
                      }),
        row.window_dp ? "holds" : "VIOLATED");
  }
  return 0;
}

// Runs the exhaustive references on a 2x2x2 grid and prints how the
// production code compares.
int RunOracleCommand(std::uint64_t seed, int runs) {
  using namespace geoperturb;
  absl::StatusOr<LocationGrid> grid = LocationGrid::Create({2, 2, 2},
                                                           {2, 2, 2});
  if (!grid.ok()) return Fail(grid.status());
  auto orders =
      std::make_shared<const std::vector<HilbertOrder>>(HilbertOrders(*grid));
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 1.0);

  int bad = 0;
  double worst_gap = 1.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> prior(grid->size());
    double z = 0.0;
    for (double& p : prior) z += (p = unit(rng));
    for (double& p : prior) p /= z;
    const int anchor = trial % grid->size();
    const double eps = 0.2 + 0.1 * (trial % 5);
    const double e_m = 0.1 + 0.05 * (trial % 4);
    absl::StatusOr<ProtectionLocationSet> found =
        FindPls(anchor, prior, eps, e_m, *orders, *grid);
    absl::StatusOr<oracle::PlsCandidate> subset =
        oracle::BestSubsetPls(anchor, prior, eps, e_m, *grid);
    absl::StatusOr<oracle::PlsCandidate> window =
        oracle::BestWindowPls(anchor, prior, eps, e_m, *orders, *grid);
    if (found.ok() != window.ok() ||
        (found.ok() && (found->diameter != window->diameter ||
                        found->diameter < subset->diameter))) {
      ++bad;
      continue;
    }
    if (found.ok()) {
      worst_gap = std::max(worst_gap, found->diameter / subset->diameter);
    }
  }
  std::cout << absl::StrFormat(
      "pls: 50 instances, %d disagreements, worst window/subset diameter "
      "ratio %.4f\n",
      bad, worst_gap);

  double worst_pf = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> cands;
    for (int c = 1; c < grid->size(); ++c) {
      if (unit(rng) < 0.7) cands.push_back(c);
    }
    if (cands.empty()) cands.push_back(7);
    absl::StatusOr<PerturbationChannel> ch = PerturbationChannel::Create(
        0, cands, *grid, 1.0 + unit(rng), 0.1 + 3 * unit(rng));
    if (!ch.ok()) return Fail(ch.status());
    absl::StatusOr<std::vector<double>> exact = PfExactPmf(*ch);
    if (!exact.ok()) return Fail(exact.status());
    std::vector<double> closed = PfPmf(*ch);
    for (std::size_t k = 0; k < closed.size(); ++k) {
      worst_pf = std::max(worst_pf, std::abs(closed[k] - (*exact)[k]));
    }
  }
  std::cout << absl::StrFormat(
      "pf: 50 channels, max |closed form - enumeration| = %.3g\n", worst_pf);

  // Exact p and q against the Monte Carlo estimate on a tiny chain.
  std::vector<double> m(64, 0.0);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) m[i * 8 + j] = i == j ? 0.4 : 0.6 / 7;
  }
  absl::StatusOr<TransitionMatrix> tm = TransitionMatrix::FromDense(8, m);
  if (!tm.ok()) return Fail(tm.status());
  Scenario scenario{*grid, orders, *tm, std::vector<double>(8, 0.125),
                    {0, 1, 2, 3, 4, 5, 6, 7}, {0, 3, 7}, NeutralProfile(8)};
  MechanismParams params;
  params.eps_window = 1.5;
  params.e_m = 0.2;
  params.window = 2;
  params.delta = 0.3;
  params.n_possible = 8;
  for (StrategyKind kind :
       {StrategyKind::k3dstpm, StrategyKind::k3dpim, StrategyKind::kP3dlppm,
        StrategyKind::k2dptppm}) {
    absl::StatusOr<oracle::ExactMetrics> exact =
        oracle::ExactTraceMetrics(kind, scenario, params);
    if (!exact.ok()) return Fail(exact.status());
    std::vector<AttackTrace> traces;
    for (int r = 0; r < runs; ++r) {
      absl::StatusOr<AttackTrace> t =
          RunStrategy(kind, scenario, params, seed + r);
      if (!t.ok()) return Fail(t.status());
      traces.push_back(*std::move(t));
    }
    absl::StatusOr<Estimate> p =
        TrajectoryPrivacy(traces, MetricSource::kSampled);
    absl::StatusOr<Estimate> q = QosLoss(traces, MetricSource::kSampled);
    if (!p.ok()) return Fail(p.status());
    if (!q.ok()) return Fail(q.status());
    std::cout << absl::StrFormat(
        "%-8s exact p=%.4f q=%.4f (%d branches) | sampled p=%.4f+-%.4f "
        "q=%.4f+-%.4f\n",
        std::string(StrategyName(kind)), exact->p, exact->q, exact->branches, p->mean,
        p->std_error, q->mean, q->std_error);
  }
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory location-privacy simulator"};
  app.require_subcommand(1);

  Overrides sweep_o;
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  AddOverrideFlags(sweep, sweep_o);

  Overrides validate_o;
  CLI::App* validate =
      app.add_subcommand("validate", "check a config without running it");
  AddOverrideFlags(validate, validate_o);

  std::uint64_t oracle_seed = 1;
  int oracle_runs = 4000;
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "compare against exhaustive references");
  oracle_cmd->add_option("--seed", oracle_seed, "random seed");
  oracle_cmd->add_option("--runs", oracle_runs, "Monte Carlo runs");

  Overrides demo_o;
  std::uint64_t demo_seed = 1;
  CLI::App* demo = app.add_subcommand("demo", "print one verbose trace");
  AddOverrideFlags(demo, demo_o);
  demo->add_option("--seed", demo_seed, "scenario and mechanism seed");

  CLI11_PARSE(app, argc, argv);

  if (sweep->parsed()) return RunSweepCommand(sweep_o);
  if (validate->parsed()) return RunValidateCommand(validate_o);
  if (oracle_cmd->parsed()) return RunOracleCommand(oracle_seed, oracle_runs);
  if (demo->parsed()) return RunDemoCommand(demo_o, demo_seed);
  return 1;
}
