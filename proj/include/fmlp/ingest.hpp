#pragma once

// File formats: curve, coordinate and target CSVs, model and basis JSON,
// experiment configs and results tables.
//
// CSVs are comma separated with a header line, LF written, LF or CRLF read.
// Reals are written with 17 significant digits.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fmlp/basis.hpp"
#include "fmlp/datagen.hpp"
#include "fmlp/network.hpp"
#include "fmlp/projection.hpp"

namespace fmlp {

namespace fs = std::filesystem;

// Curves: header `id,x,value`, rows grouped by id, x ascending within an id.
std::vector<SampledFunction> read_curves(std::istream& in, const std::string& source = "<stream>");
std::vector<SampledFunction> load_curves(const fs::path& path);
void write_curves(std::ostream& out, const std::vector<SampledFunction>& curves);
void save_curves(const fs::path& path, const std::vector<SampledFunction>& curves);

// Coordinates: header `id,c1,...,cp`.
struct CoordTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd coords;  ///< one row per id
};

CoordTable read_coords(std::istream& in, const std::string& source = "<stream>");
CoordTable load_coords(const fs::path& path);
void write_coords(std::ostream& out, const CoordTable& table);
void save_coords(const fs::path& path, const CoordTable& table);

// Targets: header `id,y`.
struct TargetTable {
  std::vector<std::string> ids;
  Eigen::VectorXd y;
};

TargetTable read_targets(std::istream& in, const std::string& source = "<stream>");
TargetTable load_targets(const fs::path& path);
void write_targets(std::ostream& out, const TargetTable& table);
void save_targets(const fs::path& path, const TargetTable& table);

/// Pairs coordinates with targets by id; every coordinate id needs a target.
CoordDataset join(const CoordTable& coords, const TargetTable& targets);

// Model JSON: {"p","L","alpha","activation":"sigmoid","a","beta0","beta"}.
std::string model_to_json(const FmlpModel& model);
FmlpModel model_from_json(const std::string& text);
void save_model(const fs::path& path, const FmlpModel& model);
FmlpModel load_model(const fs::path& path);

// Basis JSON: {"family":"fourier"|"bspline","p","degree","interior_knots"}.
// The spline transform is recomputed on load.
std::string basis_to_json(const BasisSystem& basis);
BasisSystem basis_from_json(const std::string& text);
void save_basis(const fs::path& path, const BasisSystem& basis);
BasisSystem load_basis(const fs::path& path);

struct ResultRow {
  std::string run_id;
  std::string config_hash;
  std::optional<std::uint64_t> p;  ///< empty when not applicable
  std::optional<std::uint64_t> L;
  std::optional<std::uint64_t> n;
  std::string metric;
  double value = 0.0;
  double se = 0.0;  ///< nan when no Monte Carlo error applies
  double wall_ms = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  friend bool operator==(const ResultsTable&, const ResultsTable&) = default;
};

inline constexpr const char* kResultsHeader = "run_id,config_hash,param_p,param_L,param_n,metric,value,se,wall_ms";

ResultsTable read_results(std::istream& in, const std::string& source = "<stream>");
ResultsTable load_results(const fs::path& path);
void write_results(std::ostream& out, const ResultsTable& table);
void save_results(const fs::path& path, const ResultsTable& table);

enum class ExperimentKind { ApproxSweep, ConsistencySweep, ScheduleCheck, Dataset, Train };

const char* to_string(ExperimentKind kind) noexcept;

struct ProjectionSpec {
  ProjectionMode::Kind kind = ProjectionMode::Kind::Exact;
  std::size_t samples = 100;
  GridKind grid = GridKind::Uniform;
  double ridge = 0.0;
};

struct BasisSpec {
  BasisFamily family = BasisFamily::Fourier;
  std::size_t p = 0;  ///< Fourier only; 0 = taken from the sweep grid
  int degree = 3;
  std::vector<double> interior_knots;

  /// The system for Fourier dimension `p` (ignored for splines).
  [[nodiscard]] BasisSystem make(std::size_t p) const;
};

enum class CellPairing { Product, Diagonal };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::ApproxSweep;
  std::uint64_t seed = 0;
  FunctionalDistribution distribution;
  BasisSpec basis;
  ProjectionSpec projection;

  std::vector<std::size_t> p_values;
  std::vector<std::size_t> L_values;
  std::vector<std::uint64_t> n_values;
  CellPairing pairing = CellPairing::Product;

  TrainConfig train;
  double alpha = 1000.0;       ///< approx sweep and train budget; 0 = schedule(n)
  double radius = 3.0;         ///< approx sweep coefficient ball
  std::size_t n_train = 2000;  ///< approx sweep
  std::size_t n_test = 500;    ///< approx sweep: 500, consistency: 100000
  std::size_t replicates = 5;  ///< consistency sweep seeds
  double delta = 0.25;         ///< schedule check exponent
  bool record_timing = false;  ///< write wall_ms per row (breaks bit-identical reruns)

  std::string output_dir;      ///< not part of the hash
  unsigned workers = 1;        ///< not part of the hash

  /// Canonical JSON of every result-relevant field, defaults applied.
  [[nodiscard]] std::string canonical_json() const;
  /// FNV-1a 64 of canonical_json(), 16 hex digits.
  [[nodiscard]] std::string hash() const;
};

/// Parses and validates a config. Unknown keys and invalid values are all
/// collected and reported in one Config error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const fs::path& path);

/// Default config of a kind, as produced by parse_config on {"kind": ...}.
ExperimentConfig default_config(ExperimentKind kind);

/// FNV-1a 64 of `text` as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace fmlp
