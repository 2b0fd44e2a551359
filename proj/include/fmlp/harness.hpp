#pragma once

// Experiment drivers. Each sweep cell is an independent job; rows are
// gathered per cell and emitted in cell order, so the table does not depend
// on the number of workers.

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "fmlp/ingest.hpp"

namespace fmlp {

/// Which data set a random sub-stream feeds.
enum class StreamRole { Train, Test };

struct StreamUse {
  std::uint64_t seed = 0;
  std::uint32_t substream = 0;
  StreamRole role = StreamRole::Train;
  std::string label;
};

/// Records every (seed, substream) a run draws curves from. A pair claimed
/// for both training and testing is an isolation failure.
class StreamRegistry {
 public:
  void claim(std::uint64_t seed, std::uint32_t substream, StreamRole role, std::string label);
  /// Throws Internal naming the first pair used in both roles.
  void check_disjoint() const;
  [[nodiscard]] std::vector<StreamUse> uses() const;

 private:
  mutable std::mutex mutex_;
  std::vector<StreamUse> uses_;
};

/// Collects rows per cell from concurrent jobs and releases them in cell order.
class ResultsSink {
 public:
  explicit ResultsSink(std::size_t cells) : cells_(cells) {}
  void put(std::size_t cell, std::vector<ResultRow> rows);
  [[nodiscard]] ResultsTable collect() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::vector<ResultRow>> cells_;
};

struct RunOptions {
  StreamRegistry* streams = nullptr;                ///< optional bookkeeping
  std::function<void(const std::string&)> log;      ///< optional progress lines
};

/// Sup-error and RMSE over a held-out sample of the radius-R coefficient
/// ball, per (p, L) cell. Metrics: sup_error, rmse, train_rmse.
ResultsTable run_approx_sweep(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Generalization RMSE under the schedule (L_n, alpha_n) for each replicate,
/// p and n. Metrics: risk, gap, train_rmse, alpha_n per cell and
/// oracle_risk per replicate and p.
ResultsTable run_consistency_sweep(const ExperimentConfig& cfg, const RunOptions& options = {});

/// L_n, alpha_n and both schedule ratios (capacity_ratio, budget_ratio) per n, plus violation flags
/// (capacity_violation, budget_violation; 1 = violated).
ResultsTable run_schedule_check(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Writes coords.csv, targets.csv, coefficients.csv, basis.json and, in
/// sampled mode, curves.csv into `out_dir`. Rows: rows, empirical_noise_sd.
ResultsTable generate_dataset(const ExperimentConfig& cfg, const fs::path& out_dir,
                              std::vector<std::string>* written = nullptr);

/// Projects every curve of a curves CSV by least squares and writes the
/// coordinates CSV. Rows: curves, max_residual_rms (over sample points).
ResultsTable project_curves(const BasisSystem& basis, const fs::path& curves, double ridge, const fs::path& coords_out);

/// Trains on a joined data set with cfg.train. L comes from L_values, alpha
/// from cfg.alpha; either falls back to schedule(n). Rows: train_rmse.
TrainResult train_with_config(const ExperimentConfig& cfg, const CoordDataset& data, ResultsTable* table = nullptr);

/// Writes predictions in the targets format (`id,y`). With `targets`, also
/// reports the RMSE against them. Rows: predictions[, rmse].
ResultsTable predict_file(const FmlpModel& model, const fs::path& coords, const fs::path& out,
                          const fs::path& targets = {});

/// Dispatches on cfg.kind (sweeps and schedule check only).
ResultsTable run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// True when the trailing strictly decreasing run covers at least the last
/// half of the sequence (and two points) and ends below the maximum.
bool eventually_decreasing(const std::vector<double>& values);

/// Selects the rows with the given metric, in table order.
std::vector<ResultRow> rows_with_metric(const ResultsTable& table, const std::string& metric);

struct RunMeta {
  std::string command;
  double wall_ms = 0.0;
  std::size_t failures = 0;
  std::vector<std::string> outputs;  ///< files written next to run-meta.json
};

/// run-meta.json: config hash and canonical config, versions, timing.
/// Without a config the hash of the first row is reported.
std::string run_meta_json(const ExperimentConfig* cfg, const ResultsTable& table, const RunMeta& meta);

/// Number of rows recording a failed cell.
std::size_t count_failures(const ResultsTable& table);

inline constexpr const char* kFailureMetric = "train_failed";

const char* library_version() noexcept;

}  // namespace fmlp
