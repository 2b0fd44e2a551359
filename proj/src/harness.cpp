#include "fmlp/harness.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "fmlp/error.hpp"
#include "parallel.hpp"

#ifndef FMLP_VERSION
#define FMLP_VERSION "0.0.0"
#endif

namespace fmlp {

const char* library_version() noexcept { return FMLP_VERSION; }

void StreamRegistry::claim(std::uint64_t seed, std::uint32_t substream, StreamRole role, std::string label) {
  std::lock_guard lock(mutex_);
  uses_.push_back({seed, substream, role, std::move(label)});
}

void StreamRegistry::check_disjoint() const {
  std::lock_guard lock(mutex_);
  for (const auto& a : uses_) {
    if (a.role != StreamRole::Train) continue;
    for (const auto& b : uses_) {
      if (b.role == StreamRole::Test && a.seed == b.seed && a.substream == b.substream) {
        throw Error(ErrorCode::Internal, "stream (seed " + std::to_string(a.seed) + ", substream " +
                                             std::to_string(a.substream) + ") feeds both '" + a.label + "' and '" +
                                             b.label + "'");
      }
    }
  }
}

std::vector<StreamUse> StreamRegistry::uses() const {
  std::lock_guard lock(mutex_);
  return uses_;
}

void ResultsSink::put(std::size_t cell, std::vector<ResultRow> rows) {
  std::lock_guard lock(mutex_);
  cells_.at(cell) = std::move(rows);
}

ResultsTable ResultsSink::collect() const {
  std::lock_guard lock(mutex_);
  ResultsTable table;
  for (const auto& rows : cells_) table.rows.insert(table.rows.end(), rows.begin(), rows.end());
  return table;
}

namespace {

constexpr double kNoSe = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ProjectionMode projection_mode(const ExperimentConfig& cfg, std::size_t p) {
  BasisSystem basis = cfg.basis.make(p);
  if (cfg.projection.kind == ProjectionMode::Kind::Exact) return ProjectionMode::exact(std::move(basis));
  return ProjectionMode::sampled(std::move(basis), cfg.projection.samples, cfg.projection.grid, cfg.projection.ridge);
}

void claim(const RunOptions& options, const FunctionalDistribution& dist, std::uint32_t substream, StreamRole role,
           const std::string& label) {
  if (options.streams) options.streams->claim(dist.seed, substream, role, label);
}

void log(const RunOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

/// Failure rows carry the error text nowhere but the log; the table keeps NaN.
ResultRow failure_row(ResultRow base) {
  base.metric = kFailureMetric;
  base.value = std::numeric_limits<double>::quiet_NaN();
  base.se = kNoSe;
  return base;
}

unsigned cell_workers(const ExperimentConfig& cfg) { return std::max(1u, cfg.workers); }

std::string format_ridge(double ridge) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "|ridge=%.17g", ridge);
  return buffer;
}

}  // namespace

ResultsTable run_approx_sweep(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.kind != ExperimentKind::ApproxSweep) throw Error(ErrorCode::Config, "config kind is not approx");
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  if (cfg.pairing == CellPairing::Diagonal) {
    for (std::size_t i = 0; i < cfg.p_values.size(); ++i) cells.emplace_back(cfg.p_values[i], cfg.L_values[i]);
  } else {
    for (std::size_t p : cfg.p_values) {
      for (std::size_t L : cfg.L_values) cells.emplace_back(p, L);
    }
  }

  FunctionalDistribution dist = cfg.distribution;
  dist.clip_radius = cfg.radius;
  constexpr std::uint32_t kTrainSubstream = 0;
  constexpr std::uint32_t kTestSubstream = kTestSubstreamBase;
  claim(options, dist, kTrainSubstream, StreamRole::Train, "approx training set");
  claim(options, dist, kTestSubstream, StreamRole::Test, "approx test set");

  const std::string hash = cfg.hash();
  ResultsSink sink(cells.size());
  parallel_for(cells.size(), cell_workers(cfg), [&](std::size_t c) {
    const auto [p, L] = cells[c];
    const auto start = Clock::now();
    ResultRow base{"approx-c" + std::to_string(c), hash, p, L, cfg.n_train, "", 0.0, kNoSe, 0.0};
    try {
      const ProjectionMode mode = projection_mode(cfg, p);
      const GeneratedDataset train_set = make_dataset(dist, cfg.n_train, mode, kTrainSubstream);
      const GeneratedDataset test_set = make_dataset(dist, cfg.n_test, mode, kTestSubstream);
      TrainConfig tc = cfg.train;
      tc.workers = 1;
      const TrainResult fit = train(train_set.coords, L, cfg.alpha, tc);

      const Eigen::VectorXd errors = forward_batch(fit.model, test_set.coords.inputs) - test_set.reference.regression;
      const RiskEstimate risk = risk_from_errors(errors);
      const double wall = cfg.record_timing ? elapsed_ms(start) : 0.0;
      std::vector<ResultRow> rows;
      auto add = [&](const char* metric, double value, double se) {
        ResultRow row = base;
        row.metric = metric;
        row.value = value;
        row.se = se;
        row.wall_ms = wall;
        rows.push_back(std::move(row));
      };
      add("sup_error", errors.cwiseAbs().maxCoeff(), kNoSe);
      add("rmse", risk.rmse, risk.se);
      add("train_rmse", std::sqrt(fit.report.final_loss), kNoSe);
      log(options, "approx cell " + std::to_string(c) + " p=" + std::to_string(p) + " L=" + std::to_string(L) +
                       " sup_error=" + std::to_string(errors.cwiseAbs().maxCoeff()));
      sink.put(c, std::move(rows));
    } catch (const Error& e) {
      if (is_validation_error(e.code())) throw;
      log(options, "approx cell " + std::to_string(c) + " failed: " + e.what());
      base.wall_ms = cfg.record_timing ? elapsed_ms(start) : 0.0;
      sink.put(c, {failure_row(base)});
    }
  });
  return sink.collect();
}

ResultsTable run_consistency_sweep(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.kind != ExperimentKind::ConsistencySweep) throw Error(ErrorCode::Config, "config kind is not consistency");
  const std::string hash = cfg.hash();
  const std::size_t np = cfg.p_values.size();
  const std::size_t nn = cfg.n_values.size();
  const std::size_t groups = cfg.replicates * np;
  constexpr std::uint32_t kTestSubstream = kTestSubstreamBase;

  auto replicate_dist = [&](std::size_t r) {
    FunctionalDistribution dist = cfg.distribution;
    dist.seed = cfg.distribution.seed + r;
    return dist;
  };

  // Shared test set per (replicate, p); the oracle risk comes with it.
  std::vector<GeneratedDataset> tests(groups);
  ResultsSink oracle_sink(groups);
  parallel_for(groups, cell_workers(cfg), [&](std::size_t g) {
    const std::size_t r = g / np;
    const std::size_t p = cfg.p_values[g % np];
    const FunctionalDistribution dist = replicate_dist(r);
    claim(options, dist, kTestSubstream, StreamRole::Test, "consistency test set r" + std::to_string(r));
    tests[g] = make_dataset(dist, cfg.n_test, projection_mode(cfg, p), kTestSubstream);
    const RiskEstimate oracle = risk_from_errors(tests[g].reference.noise);
    oracle_sink.put(g, {{"consistency-r" + std::to_string(r) + "-p" + std::to_string(p) + "-oracle", hash, p, std::nullopt, std::nullopt,
                         "oracle_risk", oracle.rmse, oracle.se, 0.0}});
  });

  ResultsSink sink(groups * nn);
  parallel_for(groups * nn, cell_workers(cfg), [&](std::size_t c) {
    const std::size_t g = c / nn;
    const std::size_t j = c % nn;
    const std::size_t r = g / np;
    const std::size_t p = cfg.p_values[g % np];
    const std::uint64_t n = cfg.n_values[j];
    const Schedule sched = schedule(n);
    const auto start = Clock::now();
    ResultRow base{"consistency-r" + std::to_string(r) + "-p" + std::to_string(p) + "-n" + std::to_string(j), hash,
                   p, sched.hidden_units, n, "", 0.0, kNoSe, 0.0};
    try {
      const FunctionalDistribution dist = replicate_dist(r);
      const auto substream = static_cast<std::uint32_t>(j + 1);
      claim(options, dist, substream, StreamRole::Train, "consistency training set " + base.run_id);
      const GeneratedDataset train_set = make_dataset(dist, n, projection_mode(cfg, p), substream);
      TrainConfig tc = cfg.train;
      tc.seed = cfg.train.seed + r;
      tc.workers = 1;
      const TrainResult fit = train(train_set.coords, sched.hidden_units, sched.alpha, tc);

      const GeneratedDataset& test = tests[g];
      const RiskEstimate risk =
          risk_from_errors(forward_batch(fit.model, test.coords.inputs) - test.reference.responses);
      const double wall = cfg.record_timing ? elapsed_ms(start) : 0.0;
      std::vector<ResultRow> rows;
      auto add = [&](const char* metric, double value, double se) {
        ResultRow row = base;
        row.metric = metric;
        row.value = value;
        row.se = se;
        row.wall_ms = wall;
        rows.push_back(std::move(row));
      };
      add("risk", risk.rmse, risk.se);
      add("gap", risk.rmse - dist.optimal_risk(), risk.se);
      add("train_rmse", std::sqrt(fit.report.final_loss), kNoSe);
      add("alpha_n", sched.alpha, kNoSe);
      log(options, "consistency " + base.run_id + " gap=" + std::to_string(risk.rmse - dist.optimal_risk()));
      sink.put(c, std::move(rows));
    } catch (const Error& e) {
      if (is_validation_error(e.code())) throw;
      log(options, "consistency " + base.run_id + " failed: " + e.what());
      base.wall_ms = cfg.record_timing ? elapsed_ms(start) : 0.0;
      sink.put(c, {failure_row(base)});
    }
  });

  ResultsTable table = sink.collect();
  const ResultsTable oracle = oracle_sink.collect();
  table.rows.insert(table.rows.end(), oracle.rows.begin(), oracle.rows.end());
  return table;
}

bool eventually_decreasing(const std::vector<double>& values) {
  if (values.size() < 2) return false;
  std::size_t run = 1;
  while (run < values.size() && values[values.size() - run] < values[values.size() - run - 1]) ++run;
  const double peak = *std::max_element(values.begin(), values.end());
  return run >= 2 && 2 * run >= values.size() && values.back() < peak;
}

ResultsTable run_schedule_check(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.kind != ExperimentKind::ScheduleCheck) throw Error(ErrorCode::Config, "config kind is not schedule");
  const std::string hash = cfg.hash();
  ResultsTable table;
  std::vector<double> capacity;
  std::vector<double> budget;
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    const Schedule s = schedule(cfg.n_values[i]);
    capacity.push_back(capacity_ratio(s));
    budget.push_back(budget_ratio(s, cfg.delta));
    const ResultRow base{"schedule-" + std::to_string(i), hash, std::nullopt, s.hidden_units, s.n, "", 0.0, kNoSe, 0.0};
    for (const auto& [metric, value] : {std::pair<const char*, double>{"L_n", static_cast<double>(s.hidden_units)},
                                        {"alpha_n", s.alpha},
                                        {"capacity_ratio", capacity.back()},
                                        {"budget_ratio", budget.back()}}) {
      ResultRow row = base;
      row.metric = metric;
      row.value = value;
      table.rows.push_back(std::move(row));
    }
  }
  const bool capacity_ok = eventually_decreasing(capacity);
  const bool budget_ok = eventually_decreasing(budget);
  table.rows.push_back({"schedule-summary", hash, std::nullopt, std::nullopt, std::nullopt, "capacity_violation",
                        capacity_ok ? 0.0 : 1.0, kNoSe, 0.0});
  table.rows.push_back({"schedule-summary", hash, std::nullopt, std::nullopt, std::nullopt, "budget_violation",
                        budget_ok ? 0.0 : 1.0, kNoSe, 0.0});
  log(options, std::string("schedule check: capacity ") + (capacity_ok ? "ok" : "VIOLATED") + ", budget " +
                   (budget_ok ? "ok" : "VIOLATED"));
  return table;
}

ResultsTable run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  switch (cfg.kind) {
    case ExperimentKind::ApproxSweep: return run_approx_sweep(cfg, options);
    case ExperimentKind::ConsistencySweep: return run_consistency_sweep(cfg, options);
    case ExperimentKind::ScheduleCheck: return run_schedule_check(cfg, options);
    default: break;
  }
  throw Error(ErrorCode::Config, std::string("'") + to_string(cfg.kind) + "' is not an experiment kind");
}

ResultsTable generate_dataset(const ExperimentConfig& cfg, const fs::path& out_dir, std::vector<std::string>* written) {
  if (cfg.kind != ExperimentKind::Dataset) throw Error(ErrorCode::Config, "config kind is not dataset");
  const std::size_t p = cfg.p_values.front();
  const std::uint64_t n = cfg.n_values.front();
  const ProjectionMode mode = projection_mode(cfg, p);
  const GeneratedDataset data = make_dataset(cfg.distribution, n, mode, 0);
  auto note = [&](const char* name) {
    if (written) written->push_back(name);
    return out_dir / name;
  };

  save_coords(note("coords.csv"), {data.coords.ids, data.coords.inputs});
  save_targets(note("targets.csv"), {data.coords.ids, data.coords.targets});
  save_coords(note("coefficients.csv"), {data.reference.ids, data.reference.coefficients});
  save_basis(note("basis.json"), mode.basis);
  if (mode.kind == ProjectionMode::Kind::Sampled) save_curves(note("curves.csv"), data.curves);

  const std::string hash = cfg.hash();
  const double noise_sd = n > 1 ? std::sqrt((data.reference.noise.array() - data.reference.noise.mean()).square().sum() /
                                            static_cast<double>(n - 1))
                                : 0.0;
  ResultsTable table;
  table.rows.push_back({"dataset", hash, p, std::nullopt, n, "rows", static_cast<double>(n), kNoSe, 0.0});
  table.rows.push_back({"dataset", hash, p, std::nullopt, n, "empirical_noise_sd", noise_sd, kNoSe, 0.0});
  return table;
}

ResultsTable project_curves(const BasisSystem& basis, const fs::path& curves, double ridge, const fs::path& coords_out) {
  const std::vector<SampledFunction> functions = load_curves(curves);
  if (functions.empty()) throw Error(ErrorCode::EmptyData, "'" + curves.string() + "' holds no curves");
  CoordTable table;
  table.coords.resize(static_cast<Eigen::Index>(functions.size()), static_cast<Eigen::Index>(basis.dim()));
  double worst = 0.0;
  for (std::size_t i = 0; i < functions.size(); ++i) {
    const SampledFunction& f = functions[i];
    const CoordinateVector c = project_sampled(f, basis, ridge);
    table.ids.push_back(f.id);
    table.coords.row(static_cast<Eigen::Index>(i)) = c.coords.transpose();
    const Eigen::VectorXd fitted = basis.design_matrix(f.xs) * c.coords;
    const Eigen::Map<const Eigen::VectorXd> values(f.values.data(), static_cast<Eigen::Index>(f.values.size()));
    worst = std::max(worst, std::sqrt((fitted - values).squaredNorm() / static_cast<double>(f.values.size())));
  }
  save_coords(coords_out, table);

  const std::string hash = fnv1a_hex(basis_to_json(basis) + format_ridge(ridge));
  const std::size_t p = basis.dim();
  ResultsTable results;
  results.rows.push_back({"project", hash, p, std::nullopt, functions.size(), "curves",
                          static_cast<double>(functions.size()), kNoSe, 0.0});
  results.rows.push_back({"project", hash, p, std::nullopt, functions.size(), "max_residual_rms", worst, kNoSe, 0.0});
  return results;
}

TrainResult train_with_config(const ExperimentConfig& cfg, const CoordDataset& data, ResultsTable* table) {
  if (cfg.kind != ExperimentKind::Train) throw Error(ErrorCode::Config, "config kind is not train");
  data.validate();
  const Schedule sched = schedule(data.size());
  const std::size_t L = cfg.L_values.empty() ? sched.hidden_units : cfg.L_values.front();
  const double alpha = cfg.alpha > 0.0 ? cfg.alpha : sched.alpha;
  TrainConfig tc = cfg.train;
  tc.workers = std::max(1u, cfg.workers);
  TrainResult fit = train(data, L, alpha, tc);
  if (table) {
    table->rows.push_back({"train", cfg.hash(), data.dim(), L, data.size(), "train_rmse",
                           std::sqrt(fit.report.final_loss), kNoSe, 0.0});
  }
  return fit;
}

ResultsTable predict_file(const FmlpModel& model, const fs::path& coords, const fs::path& out, const fs::path& targets) {
  const CoordTable table = load_coords(coords);
  const Eigen::VectorXd y = forward_batch(model, table.coords);
  save_targets(out, {table.ids, y});

  const std::string hash = fnv1a_hex(model_to_json(model));
  const std::size_t n = table.ids.size();
  ResultsTable results;
  results.rows.push_back(
      {"predict", hash, model.input_dim(), model.hidden_units(), n, "predictions", static_cast<double>(n), kNoSe, 0.0});
  if (!targets.empty()) {
    CoordDataset joined = join(table, load_targets(targets));
    const RiskEstimate risk = risk_from_errors(y - joined.targets);
    results.rows.push_back({"predict", hash, model.input_dim(), model.hidden_units(), n, "rmse", risk.rmse, risk.se, 0.0});
  }
  return results;
}

std::vector<ResultRow> rows_with_metric(const ResultsTable& table, const std::string& metric) {
  std::vector<ResultRow> out;
  std::copy_if(table.rows.begin(), table.rows.end(), std::back_inserter(out),
               [&](const ResultRow& row) { return row.metric == metric; });
  return out;
}

std::size_t count_failures(const ResultsTable& table) {
  return static_cast<std::size_t>(std::count_if(table.rows.begin(), table.rows.end(),
                                                [](const ResultRow& row) { return row.metric == kFailureMetric; }));
}

std::string run_meta_json(const ExperimentConfig* cfg, const ResultsTable& table, const RunMeta& meta) {
  using nlohmann::json;
  json doc = {
      {"command", meta.command},
      {"versions",
       {{"fmlp", library_version()},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__}}},
      {"timing", {{"wall_ms", meta.wall_ms}, {"workers", cfg ? cfg->workers : 1u}}},
      {"rows", table.rows.size()},
      {"failures", meta.failures},
      {"outputs", meta.outputs},
  };
  if (cfg) {
    doc["kind"] = to_string(cfg->kind);
    doc["config_hash"] = cfg->hash();
    doc["config"] = json::parse(cfg->canonical_json());
  } else {
    doc["config_hash"] = table.rows.empty() ? std::string() : table.rows.front().config_hash;
  }
  return doc.dump(2) + "\n";
}

}  // namespace fmlp
