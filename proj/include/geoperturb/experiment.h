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

#ifndef GEOPERTURB_EXPERIMENT_H_
#define GEOPERTURB_EXPERIMENT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "geoperturb/baselines.h"
#include "geoperturb/grid.h"

namespace geoperturb {

inline constexpr std::string_view kLibraryVersion = "0.3.0";
inline constexpr std::string_view kSeedEnvVar = "GEOPERTURB_SEED";

struct ExperimentConfig {
  std::array<int, 3> dims = {8, 8, 8};
  std::array<double, 3> extent = {10.0, 10.0, 10.0};
  int n_locations = 50;
  int trajectory_length = 5;
  int rotations = kRotationCount;

  // Synthetic history: a random walk over the designated cells.
  int walk_steps = 5000;
  double neighbor_radius = 4.0;  // meters; larger hops are unreachable
  int max_retries = 20;

  std::vector<double> eps_w = {1.0};
  std::vector<double> e_m = {0.5};
  std::vector<int> window = {4};
  std::vector<double> delta = {0.3};
  bool single_window = false;  // allows w >= trajectory_length

  std::array<double, 3> gamma = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<double, 2> alpha = {0.002, 0.002};
  double lambda_user = 0.5;
  double i_user = 0.5;
  std::vector<double> semantic_levels = {0.0, 1.0, 2.0, 3.0};
  double semantic_scale = 1.0 / 3;
  double eps_floor = BudgetLedger::kDefaultFloor;
  SensitivityScaling scaling = SensitivityScaling::kSemanticTerm;
  GuessScope guess_scope = GuessScope::kWholeMap;
  ReleaseDomain release_domain = ReleaseDomain::kDeltaSet;

  std::vector<StrategyKind> strategies = {StrategyKind::k3dstpm};
  std::uint64_t base_seed = 1;
  int seed_count = 20;
  std::vector<std::uint64_t> seeds;  // explicit list; overrides base/count

  int threads = 0;  // 0 picks the hardware concurrency
  std::string output = "results.csv";
  std::string manifest;  // empty: no manifest

  std::vector<std::uint64_t> SeedList() const;
};

absl::Status ValidateConfig(const ExperimentConfig& config);

// Parses the JSON config format; unknown keys are rejected. The result is
// validated.
absl::StatusOr<ExperimentConfig> ParseConfig(std::string_view json_text);
absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path);
std::string ConfigToJson(const ExperimentConfig& config);

// Replaces the base seed with GEOPERTURB_SEED when set.
absl::Status ApplySeedEnvironment(ExperimentConfig& config);

// The grid and Hilbert orders shared by every scenario of a config.
struct World {
  LocationGrid grid;
  std::shared_ptr<const std::vector<HilbertOrder>> orders;
};
absl::StatusOr<World> BuildWorld(const ExperimentConfig& config);

// A deterministic scenario for (config, seed). Disconnected draws are
// retried with the next sub-seed up to config.max_retries times.
absl::StatusOr<Scenario> GenerateScenario(const ExperimentConfig& config,
                                          const World& world,
                                          std::uint64_t seed);
absl::StatusOr<Scenario> GenerateScenario(const ExperimentConfig& config,
                                          std::uint64_t seed);

// 64-bit FNV-1a digest of everything that determines a scenario.
std::uint64_t ScenarioDigest(const Scenario& scenario);

MechanismParams ParamsFor(const ExperimentConfig& config, double eps_w,
                          double e_m, int window, double delta);

struct ResultRow {
  std::string strategy;
  std::uint64_t seed = 0;
  double eps_w = 0.0;
  double e_m = 0.0;
  int window = 0;
  double delta = 0.0;
  double p = 0.0;  // meters
  double q = 0.0;  // meters
  double mean_pls_diameter = 0.0;
  double mean_epsilon = 0.0;
  int suppressed = 0;
  bool window_dp = true;
  std::string status = "ok";  // ok | infeasible | error
  std::string detail;
};

// Summarizes one trace into a row (p and q from the conditional metrics).
ResultRow RowFromTrace(const AttackTrace& trace);

using RowSink = std::function<absl::Status(const ResultRow&)>;

// Runs the Cartesian product eps_w x e_m x w x delta x strategies x seeds.
// Rows reach `sink` in that order as soon as they and all earlier rows are
// done. A failing run becomes a flagged row; the sweep carries on.
absl::StatusOr<std::vector<ResultRow>> RunSweep(const ExperimentConfig& config,
                                                const RowSink& sink = nullptr);

std::string CsvHeader();
std::string CsvLine(const ResultRow& row);

// Incremental CSV output: the header on open, one line per Append.
class CsvWriter {
 public:
  static absl::StatusOr<std::unique_ptr<CsvWriter>> Open(
      const std::string& path);
  absl::Status Append(const ResultRow& row);
  absl::Status Close();

 private:
  CsvWriter(std::string path, std::unique_ptr<std::ostream> out)
      : path_(std::move(path)), out_(std::move(out)) {}

  std::string path_;
  std::unique_ptr<std::ostream> out_;
};

// Writes header plus rows. Empty `rows` is InvalidArgument.
absl::Status EmitCsv(const std::vector<ResultRow>& rows,
                     const std::string& path);

// Config digest, seeds and library version as JSON.
absl::Status WriteManifest(const ExperimentConfig& config,
                           const std::string& path);

}  // namespace geoperturb

#endif  // GEOPERTURB_EXPERIMENT_H_
