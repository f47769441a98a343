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

#include "geoperturb/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "geoperturb/mobility.h"
#include "json.hpp"

namespace geoperturb {

using json = nlohmann::json;

std::vector<std::uint64_t> ExperimentConfig::SeedList() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int i = 0; i < seed_count; ++i) out.push_back(base_seed + i);
  return out;
}

namespace {

bool PowerOfTwo(int v) { return v >= 2 && (v & (v - 1)) == 0; }

template <typename T>
absl::Status AllPositive(const std::vector<T>& values, std::string_view name) {
  if (values.empty()) {
    return absl::InvalidArgumentError(absl::StrCat("sweep list '", std::string(name),
                                                   "' is empty"));
  }
  for (T v : values) {
    if (!(v > 0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("sweep list '", std::string(name), "' has nonpositive value ", v));
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ValidateConfig(const ExperimentConfig& c) {
  for (int k = 0; k < 3; ++k) {
    if (!PowerOfTwo(c.dims[k])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "grid dims must be powers of two >= 2, got ", c.dims[k]));
    }
    if (!(c.extent[k] > 0.0)) {
      return absl::InvalidArgumentError("grid extents must be positive");
    }
  }
  const int n = c.dims[0] * c.dims[1] * c.dims[2];
  if (c.n_locations < 2 || c.n_locations > n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "n_locations must lie in [2, ", n, "], got ", c.n_locations));
  }
  if (c.trajectory_length < 1) {
    return absl::InvalidArgumentError("trajectory_length must be >= 1");
  }
  if (c.rotations < 1 || c.rotations > kRotationCount) {
    return absl::InvalidArgumentError(
        absl::StrCat("rotations must lie in [1, ", kRotationCount, "]"));
  }
  if (c.walk_steps < 1 || !(c.neighbor_radius > 0.0) || c.max_retries < 1) {
    return absl::InvalidArgumentError(
        "walk_steps, neighbor_radius and max_retries must be positive");
  }
  for (absl::Status s :
       {AllPositive(c.eps_w, "eps_w"), AllPositive(c.e_m, "e_m"),
        AllPositive(c.window, "w"), AllPositive(c.delta, "delta")}) {
    if (!s.ok()) return s;
  }
  for (double d : c.delta) {
    if (d >= 1.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("delta must lie in (0, 1), got ", d));
    }
  }
  if (!c.single_window) {
    for (int w : c.window) {
      if (w >= c.trajectory_length) {
        return absl::InvalidArgumentError(absl::StrCat(
            "window w=", w, " must be smaller than the trajectory length ",
            c.trajectory_length, " (set single_window to allow it)"));
      }
    }
  }
  double gsum = c.gamma[0] + c.gamma[1] + c.gamma[2];
  if (*std::min_element(c.gamma.begin(), c.gamma.end()) < 0.0 ||
      std::abs(gsum - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        "gamma weights must be nonnegative and sum to 1");
  }
  if (c.alpha[0] < 0.0 || c.alpha[1] < 0.0 || c.lambda_user < 0.0) {
    return absl::InvalidArgumentError("alpha and lambda_user must be >= 0");
  }
  if (c.i_user < 0.0 || c.i_user > 1.0) {
    return absl::InvalidArgumentError("i_user must lie in [0, 1]");
  }
  if (c.semantic_levels.empty() || !(c.semantic_scale >= 0.0)) {
    return absl::InvalidArgumentError(
        "semantic_levels must be nonempty and semantic_scale >= 0");
  }
  for (double s : c.semantic_levels) {
    if (s < 0.0) {
      return absl::InvalidArgumentError("semantic levels must be >= 0");
    }
  }
  if (!(c.eps_floor > 0.0)) {
    return absl::InvalidArgumentError("eps_floor must be positive");
  }
  if (c.strategies.empty()) {
    return absl::InvalidArgumentError("no strategies selected");
  }
  if (c.seeds.empty() && c.seed_count < 1) {
    return absl::InvalidArgumentError("seed count must be >= 1");
  }
  if (c.threads < 0) {
    return absl::InvalidArgumentError("threads must be >= 0");
  }
  return absl::OkStatus();
}

namespace {

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void CheckKeys(const json& j, std::initializer_list<std::string_view> allowed,
               std::string_view where) {
  if (!j.is_object()) {
    throw std::invalid_argument(absl::StrCat("'", std::string(where),
                                             "' must be an object"));
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument(
          absl::StrCat("unknown key '", key, "' in ", std::string(where)));
    }
  }
}

template <typename E>
E ReadEnum(const json& j, const char* key, E current,
           std::initializer_list<std::pair<std::string_view, E>> names) {
  if (!j.contains(key)) return current;
  std::string v = j.at(key).get<std::string>();
  for (const auto& [name, e] : names) {
    if (v == name) return e;
  }
  throw std::invalid_argument(
      absl::StrCat("bad value '", v, "' for '", key, "'"));
}

}  // namespace

absl::StatusOr<ExperimentConfig> ParseConfig(std::string_view json_text) {
  ExperimentConfig c;
  try {
    json j = json::parse(json_text);
    CheckKeys(j,
              {"grid", "n_locations", "trajectory_length", "rotations",
               "history", "sweep", "single_window", "profile", "mechanism",
               "strategies", "seeds", "threads", "output", "manifest"},
              "config");
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      CheckKeys(g, {"dims", "extent"}, "grid");
      Read(g, "dims", c.dims);
      Read(g, "extent", c.extent);
    }
    Read(j, "n_locations", c.n_locations);
    Read(j, "trajectory_length", c.trajectory_length);
    Read(j, "rotations", c.rotations);
    if (j.contains("history")) {
      const json& h = j.at("history");
      CheckKeys(h, {"walk_steps", "neighbor_radius", "max_retries"},
                "history");
      Read(h, "walk_steps", c.walk_steps);
      Read(h, "neighbor_radius", c.neighbor_radius);
      Read(h, "max_retries", c.max_retries);
    }
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      CheckKeys(s, {"eps_w", "e_m", "w", "delta"}, "sweep");
      Read(s, "eps_w", c.eps_w);
      Read(s, "e_m", c.e_m);
      Read(s, "w", c.window);
      Read(s, "delta", c.delta);
    }
    Read(j, "single_window", c.single_window);
    if (j.contains("profile")) {
      const json& p = j.at("profile");
      CheckKeys(p,
                {"gamma", "alpha", "lambda_user", "i_user", "semantic_levels",
                 "semantic_scale", "eps_floor", "scaling"},
                "profile");
      Read(p, "gamma", c.gamma);
      Read(p, "alpha", c.alpha);
      Read(p, "lambda_user", c.lambda_user);
      Read(p, "i_user", c.i_user);
      Read(p, "semantic_levels", c.semantic_levels);
      Read(p, "semantic_scale", c.semantic_scale);
      Read(p, "eps_floor", c.eps_floor);
      c.scaling = ReadEnum(p, "scaling", c.scaling,
                           {{"semantic", SensitivityScaling::kSemanticTerm},
                            {"whole", SensitivityScaling::kWholeSum}});
    }
    if (j.contains("mechanism")) {
      const json& m = j.at("mechanism");
      CheckKeys(m, {"guess_scope", "release_domain"}, "mechanism");
      c.guess_scope = ReadEnum(m, "guess_scope", c.guess_scope,
                               {{"map", GuessScope::kWholeMap},
                                {"members", GuessScope::kMembers}});
      c.release_domain =
          ReadEnum(m, "release_domain", c.release_domain,
                   {{"delta_set", ReleaseDomain::kDeltaSet},
                    {"protection_set", ReleaseDomain::kProtectionSet}});
    }
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const json& s : j.at("strategies")) {
        absl::StatusOr<StrategyKind> kind =
            ParseStrategy(s.get<std::string>());
        if (!kind.ok()) return kind.status();
        c.strategies.push_back(*kind);
      }
    }
    if (j.contains("seeds")) {
      const json& s = j.at("seeds");
      if (s.is_array()) {
        c.seeds = s.get<std::vector<std::uint64_t>>();
        if (c.seeds.empty()) {
          return absl::InvalidArgumentError("seed list is empty");
        }
      } else {
        CheckKeys(s, {"base", "count"}, "seeds");
        Read(s, "base", c.base_seed);
        Read(s, "count", c.seed_count);
      }
    }
    Read(j, "threads", c.threads);
    Read(j, "output", c.output);
    Read(j, "manifest", c.manifest);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad config: ", e.what()));
  } catch (const std::invalid_argument& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad config: ", e.what()));
  }
  if (absl::Status s = ValidateConfig(c); !s.ok()) return s;
  return c;
}

absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot read config ", path));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<ExperimentConfig> c = ParseConfig(buf.str());
  if (!c.ok()) {
    return absl::Status(c.status().code(),
                        absl::StrCat(path, ": ", c.status().message()));
  }
  return c;
}

std::string ConfigToJson(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"dims", c.dims}, {"extent", c.extent}};
  j["n_locations"] = c.n_locations;
  j["trajectory_length"] = c.trajectory_length;
  j["rotations"] = c.rotations;
  j["history"] = {{"walk_steps", c.walk_steps},
                  {"neighbor_radius", c.neighbor_radius},
                  {"max_retries", c.max_retries}};
  j["sweep"] = {{"eps_w", c.eps_w},
                {"e_m", c.e_m},
                {"w", c.window},
                {"delta", c.delta}};
  j["single_window"] = c.single_window;
  j["profile"] = {
      {"gamma", c.gamma},
      {"alpha", c.alpha},
      {"lambda_user", c.lambda_user},
      {"i_user", c.i_user},
      {"semantic_levels", c.semantic_levels},
      {"semantic_scale", c.semantic_scale},
      {"eps_floor", c.eps_floor},
      {"scaling", c.scaling == SensitivityScaling::kSemanticTerm ? "semantic"
                                                                 : "whole"}};
  j["mechanism"] = {
      {"guess_scope",
       c.guess_scope == GuessScope::kWholeMap ? "map" : "members"},
      {"release_domain", c.release_domain == ReleaseDomain::kDeltaSet
                             ? "delta_set"
                             : "protection_set"}};
  std::vector<std::string> names;
  for (StrategyKind k : c.strategies) names.emplace_back(StrategyName(k));
  j["strategies"] = names;
  j["seeds"] = c.SeedList();
  j["threads"] = c.threads;
  j["output"] = c.output;
  if (!c.manifest.empty()) j["manifest"] = c.manifest;
  return j.dump(2);
}

absl::Status ApplySeedEnvironment(ExperimentConfig& config) {
  const char* env = std::getenv(std::string(kSeedEnvVar).c_str());
  if (env == nullptr || *env == '\0') return absl::OkStatus();
  std::uint64_t seed = 0;
  if (!absl::SimpleAtoi(env, &seed)) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(kSeedEnvVar), " is not an unsigned integer: '", env, "'"));
  }
  config.base_seed = seed;
  config.seeds.clear();
  return absl::OkStatus();
}

absl::StatusOr<World> BuildWorld(const ExperimentConfig& config) {
  absl::StatusOr<LocationGrid> grid =
      LocationGrid::Create(config.dims, config.extent);
  if (!grid.ok()) return grid.status();
  auto orders = std::make_shared<const std::vector<HilbertOrder>>(
      HilbertOrders(*grid, config.rotations));
  return World{*std::move(grid), std::move(orders)};
}

namespace {

bool Connected(const std::vector<int>& cells, const LocationGrid& grid,
               double radius) {
  std::vector<bool> seen(cells.size(), false);
  std::deque<std::size_t> queue = {0};
  seen[0] = true;
  std::size_t count = 1;
  while (!queue.empty()) {
    std::size_t a = queue.front();
    queue.pop_front();
    for (std::size_t b = 0; b < cells.size(); ++b) {
      if (!seen[b] && grid.d3(cells[a], cells[b]) <= radius) {
        seen[b] = true;
        ++count;
        queue.push_back(b);
      }
    }
  }
  return count == cells.size();
}

std::optional<Scenario> TryGenerate(const ExperimentConfig& config,
                                    const World& world, Rng& rng) {
  const LocationGrid& grid = world.grid;
  const int n = grid.size();

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int k = 0; k < config.n_locations; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(all[k], all[pick(rng)]);
  }
  std::vector<int> cells(all.begin(), all.begin() + config.n_locations);
  std::sort(cells.begin(), cells.end());
  if (!Connected(cells, grid, config.neighbor_radius)) return std::nullopt;

  std::exponential_distribution<double> draw_weight(1.0);
  std::vector<double> attract(n, 0.0);
  for (int c : cells) attract[c] = draw_weight(rng);

  Reachability reach(n, false);
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) reach.set(i, i, true);
  for (int a : cells) {
    for (int b : cells) {
      if (grid.d3(a, b) <= config.neighbor_radius) {
        reach.set(a, b, true);
        neighbors[a].push_back(b);
      }
    }
  }

  CountMatrix counts(n);
  std::vector<std::int64_t> visits(n, 0);
  std::vector<std::int64_t> stays(n, 0);
  std::uniform_int_distribution<int> start(0, config.n_locations - 1);
  int at = cells[start(rng)];
  visits[at]++;
  for (int step = 0; step < config.walk_steps; ++step) {
    std::vector<double> w;
    w.reserve(neighbors[at].size());
    for (int b : neighbors[at]) w.push_back(attract[b]);
    std::discrete_distribution<int> next(w.begin(), w.end());
    int to = neighbors[at][next(rng)];
    counts.at(at, to)++;
    if (to == at) stays[at]++;
    visits[to]++;
    at = to;
  }

  absl::StatusOr<TransitionMatrix> m = EstimateTransitionMatrix(counts, reach);
  if (!m.ok()) return std::nullopt;

  std::int64_t total = std::accumulate(visits.begin(), visits.end(),
                                       std::int64_t{0});
  std::vector<double> prior(n, 0.0);
  for (int i = 0; i < n; ++i) {
    prior[i] = static_cast<double>(visits[i]) / total;
  }

  UserProfile profile = NeutralProfile(n);
  std::int64_t max_visits = *std::max_element(visits.begin(), visits.end());
  std::int64_t max_stays = *std::max_element(stays.begin(), stays.end());
  std::uniform_int_distribution<std::size_t> level(
      0, config.semantic_levels.size() - 1);
  for (int c : cells) {
    profile.visit_freq[c] = static_cast<double>(visits[c]) / max_visits;
    profile.sojourn[c] =
        max_stays > 0 ? static_cast<double>(stays[c]) / max_stays : 0.0;
    profile.semantic[c] =
        config.semantic_levels[level(rng)] * config.semantic_scale;
  }
  profile.i_user = config.i_user;
  profile.lambda_user = config.lambda_user;
  profile.gamma_time = config.gamma[0];
  profile.gamma_freq = config.gamma[1];
  profile.gamma_semantic = config.gamma[2];
  profile.alpha_predictability = config.alpha[0];
  profile.alpha_sensitivity = config.alpha[1];
  profile.scaling = config.scaling;

  std::vector<int> trajectory;
  std::discrete_distribution<int> initial(prior.begin(), prior.end());
  int x = initial(rng);
  trajectory.push_back(x);
  for (int t = 1; t < config.trajectory_length; ++t) {
    std::span<const double> row = m->row(x);
    std::discrete_distribution<int> step(row.begin(), row.end());
    x = step(rng);
    trajectory.push_back(x);
  }

  return Scenario{grid,         world.orders, *std::move(m), std::move(prior),
                  std::move(cells), std::move(trajectory), std::move(profile)};
}

}  // namespace

absl::StatusOr<Scenario> GenerateScenario(const ExperimentConfig& config,
                                          const World& world,
                                          std::uint64_t seed) {
  if (absl::Status s = ValidateConfig(config); !s.ok()) return s;
  for (int attempt = 0; attempt < config.max_retries; ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    Rng rng(seq);
    if (std::optional<Scenario> s = TryGenerate(config, world, rng)) {
      return *std::move(s);
    }
  }
  return absl::FailedPreconditionError(absl::StrCat(
      "no connected set of ", config.n_locations, " cells within radius ",
      config.neighbor_radius, " m after ", config.max_retries,
      " attempts (seed ", seed, ")"));
}

absl::StatusOr<Scenario> GenerateScenario(const ExperimentConfig& config,
                                          std::uint64_t seed) {
  absl::StatusOr<World> world = BuildWorld(config);
  if (!world.ok()) return world.status();
  return GenerateScenario(config, *world, seed);
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void Bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  }
  template <typename T>
  void Value(const T& v) {
    Bytes(&v, sizeof(v));
  }
  template <typename T>
  void Vector(const std::vector<T>& v) {
    Value(v.size());
    Bytes(v.data(), v.size() * sizeof(T));
  }
};

}  // namespace

std::uint64_t ScenarioDigest(const Scenario& s) {
  Fnv f;
  f.Value(s.grid.dims());
  f.Value(s.grid.extent());
  for (int i = 0; i < s.transitions.size(); ++i) {
    for (double v : s.transitions.row(i)) f.Value(v);
  }
  f.Vector(s.initial_prior);
  f.Vector(s.locations);
  f.Vector(s.trajectory);
  f.Vector(s.profile.sojourn);
  f.Vector(s.profile.visit_freq);
  f.Vector(s.profile.semantic);
  return f.h;
}

MechanismParams ParamsFor(const ExperimentConfig& config, double eps_w,
                          double e_m, int window, double delta) {
  MechanismParams p;
  p.eps_window = eps_w;
  p.e_m = e_m;
  p.window = window;
  p.delta = delta;
  p.n_possible = config.n_locations;
  p.eps_floor = config.eps_floor;
  p.guess_scope = config.guess_scope;
  p.release_domain = config.release_domain;
  return p;
}

ResultRow RowFromTrace(const AttackTrace& trace) {
  ResultRow row;
  double p = 0.0;
  double q = 0.0;
  double diam = 0.0;
  double eps = 0.0;
  int released = 0;
  int with_pls = 0;
  for (const StepRecord& s : trace.steps) {
    p += s.expected_privacy;
    if (s.released) {
      ++released;
      q += s.expected_qos;
      eps += s.epsilon;
    }
    if (s.pls_diameter > 0.0) {
      ++with_pls;
      diam += s.pls_diameter;
    }
  }
  if (!trace.steps.empty()) row.p = p / trace.steps.size();
  if (released > 0) {
    row.q = q / released;
    row.mean_epsilon = eps / released;
  }
  if (with_pls > 0) row.mean_pls_diameter = diam / with_pls;
  row.suppressed = trace.suppressed;
  row.window_dp =
      VerifyWindowDp(trace.budget_history, trace.window, trace.eps_window);
  return row;
}

absl::StatusOr<std::vector<ResultRow>> RunSweep(const ExperimentConfig& config,
                                                const RowSink& sink) {
  if (absl::Status s = ValidateConfig(config); !s.ok()) return s;
  absl::StatusOr<World> world = BuildWorld(config);
  if (!world.ok()) return world.status();

  const std::vector<std::uint64_t> seeds = config.SeedList();
  std::vector<absl::StatusOr<Scenario>> scenarios;
  scenarios.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    scenarios.push_back(GenerateScenario(config, *world, seed));
  }

  struct Job {
    double eps_w, e_m, delta;
    int window;
    StrategyKind kind;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  for (double eps_w : config.eps_w) {
    for (double e_m : config.e_m) {
      for (int w : config.window) {
        for (double delta : config.delta) {
          for (StrategyKind kind : config.strategies) {
            for (std::size_t i = 0; i < seeds.size(); ++i) {
              jobs.push_back({eps_w, e_m, delta, w, kind, i});
            }
          }
        }
      }
    }
  }

  auto run = [&](const Job& job) {
    const absl::StatusOr<Scenario>& scenario = scenarios[job.seed_index];
    ResultRow row;
    absl::Status status;
    if (!scenario.ok()) {
      status = scenario.status();
    } else {
      absl::StatusOr<AttackTrace> trace =
          RunStrategy(job.kind, *scenario,
                      ParamsFor(config, job.eps_w, job.e_m, job.window,
                                job.delta),
                      seeds[job.seed_index]);
      if (trace.ok()) {
        row = RowFromTrace(*trace);
      } else {
        status = trace.status();
      }
    }
    if (!status.ok()) {
      row.status = absl::IsFailedPrecondition(status) ? "infeasible" : "error";
      row.detail = std::string(status.message());
    }
    row.strategy = std::string(StrategyName(job.kind));
    row.seed = seeds[job.seed_index];
    row.eps_w = job.eps_w;
    row.e_m = job.e_m;
    row.window = job.window;
    row.delta = job.delta;
    return row;
  };

  std::vector<std::optional<ResultRow>> done(jobs.size());
  std::size_t next_emit = 0;
  absl::Status sink_status;
  std::mutex mu;
  std::atomic<std::size_t> next_job{0};

  auto worker = [&] {
    for (;;) {
      std::size_t i = next_job.fetch_add(1);
      if (i >= jobs.size()) return;
      ResultRow row = run(jobs[i]);
      std::lock_guard<std::mutex> lock(mu);
      done[i] = std::move(row);
      while (next_emit < done.size() && done[next_emit]) {
        if (sink && sink_status.ok()) sink_status = sink(*done[next_emit]);
        ++next_emit;
      }
    }
  };

  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(
                                       jobs.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (!sink_status.ok()) return sink_status;

  std::vector<ResultRow> rows;
  rows.reserve(done.size());
  for (auto& r : done) rows.push_back(*std::move(r));
  return rows;
}

std::string CsvHeader() {
  return "strategy,seed,eps_w,e_m,w,delta,p,q,mean_pls_diameter,"
         "mean_epsilon,suppressed,window_dp,status,detail";
}

namespace {

std::string Quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string CsvLine(const ResultRow& r) {
  const bool ok = r.status == "ok";
  auto num = [ok](double v) {
    return ok ? absl::StrFormat("%.6f", v) : std::string();
  };
  return absl::StrCat(Quote(r.strategy), ",", r.seed, ",",
                      absl::StrFormat("%g", r.eps_w), ",",
                      absl::StrFormat("%g", r.e_m), ",", r.window, ",",
                      absl::StrFormat("%g", r.delta), ",", num(r.p), ",",
                      num(r.q), ",", num(r.mean_pls_diameter), ",",
                      num(r.mean_epsilon), ",", r.suppressed, ",",
                      r.window_dp ? 1 : 0, ",", r.status, ",",
                      Quote(r.detail));
}

absl::StatusOr<std::unique_ptr<CsvWriter>> CsvWriter::Open(
    const std::string& path) {
  auto out = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot open ", path, " for writing"));
  }
  *out << CsvHeader() << '\n';
  if (!*out) {
    return absl::DataLossError(absl::StrCat("write to ", path, " failed"));
  }
  return std::unique_ptr<CsvWriter>(new CsvWriter(path, std::move(out)));
}

absl::Status CsvWriter::Append(const ResultRow& row) {
  *out_ << CsvLine(row) << '\n';
  out_->flush();
  if (!*out_) {
    return absl::DataLossError(absl::StrCat("write to ", path_, " failed"));
  }
  return absl::OkStatus();
}

absl::Status CsvWriter::Close() {
  out_->flush();
  if (!*out_) {
    return absl::DataLossError(absl::StrCat("write to ", path_, " failed"));
  }
  out_.reset();
  return absl::OkStatus();
}

absl::Status EmitCsv(const std::vector<ResultRow>& rows,
                     const std::string& path) {
  if (rows.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("refusing to write an empty result set to ", path));
  }
  absl::StatusOr<std::unique_ptr<CsvWriter>> writer = CsvWriter::Open(path);
  if (!writer.ok()) return writer.status();
  for (const ResultRow& row : rows) {
    if (absl::Status s = (*writer)->Append(row); !s.ok()) return s;
  }
  return (*writer)->Close();
}

absl::Status WriteManifest(const ExperimentConfig& config,
                           const std::string& path) {
  std::string config_json = ConfigToJson(config);
  Fnv f;
  f.Bytes(config_json.data(), config_json.size());
  json j;
  j["config_digest"] = absl::StrFormat("%016x", f.h);
  j["seeds"] = config.SeedList();
  j["library_version"] = std::string(kLibraryVersion);
  j["config"] = json::parse(config_json);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot open ", path, " for writing"));
  }
  out << j.dump(2) << '\n';
  if (!out) {
    return absl::DataLossError(absl::StrCat("write to ", path, " failed"));
  }
  return absl::OkStatus();
}

}  // namespace geoperturb
