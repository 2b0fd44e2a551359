#pragma once

// Synthetic functional regression problems with a known regression function.
//
// Curves are G = sum_k xi_k phi_k on the Fourier system of dimension K_max,
// with independent xi_k ~ N(0, (k^-s)^2) (k 1-based), optionally pulled back
// radially into a Euclidean ball. Responses are Y = F(G) + eps with
// eps ~ N(0, noise_sd^2) independent of G, so E[Y | G] = F(G) and the minimal
// root mean square error is noise_sd.

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fmlp/basis.hpp"
#include "fmlp/network.hpp"
#include "fmlp/projection.hpp"
#include "fmlp/rng.hpp"

namespace fmlp {

enum class TargetKind { Linear, SquaredNorm, Sine };

/// F(g) expressed on the generating Fourier coefficients of g.
///   Linear:      <w, g>          = sum_k w_k xi_k
///   SquaredNorm: ||g||^2         = sum_k xi_k^2
///   Sine:        sin(scale <w, g>)
/// `w` holds Fourier coefficients; missing trailing entries are zero.
struct TargetFunctional {
  TargetKind kind = TargetKind::Linear;
  Eigen::VectorXd w;
  double scale = 1.0;

  static TargetFunctional linear(Eigen::VectorXd w);
  static TargetFunctional squared_norm();
  static TargetFunctional sine(Eigen::VectorXd w, double scale);
};

const char* to_string(TargetKind kind) noexcept;

/// Target value from Fourier coefficients.
double eval_target(const TargetFunctional& target, const Eigen::Ref<const Eigen::VectorXd>& coeffs);

/// Checked variant: `g` must carry a Fourier basis reference.
double eval_target(const TargetFunctional& target, const CoordinateVector& g);

struct FunctionalDistribution {
  std::size_t k_max = 25;
  double decay = 1.5;        ///< s in sd_k = k^-s
  double amplitude = 1.0;    ///< common factor on every sd_k
  double noise_sd = 0.2;
  TargetFunctional target;
  std::uint64_t seed = 0;
  double clip_radius = 0.0;  ///< 0 = no clipping

  /// sd of xi_k for 0-based k.
  [[nodiscard]] double coefficient_sd(std::size_t k) const;
  [[nodiscard]] BasisSystem generating_basis() const { return BasisSystem::fourier(k_max); }
  /// Minimal root mean square error.
  [[nodiscard]] double optimal_risk() const noexcept { return noise_sd; }
  void validate() const;
};

/// Sub-streams at or above this value are reserved for test sets.
inline constexpr std::uint32_t kTestSubstreamBase = 1u << 23;

/// Stream identities used for draw `index` of a data set on `substream`.
StreamId coefficient_stream(std::uint32_t substream, std::uint64_t index);
StreamId noise_stream(std::uint32_t substream, std::uint64_t index);
StreamId grid_stream(std::uint32_t substream, std::uint64_t index);

struct CurveDraw {
  CoordinateVector coeffs;  ///< generating coefficients, length K_max
  EvaluableFunction curve;
};

/// Deterministic in (dist.seed, substream, index).
Eigen::VectorXd sample_coefficients(const FunctionalDistribution& dist, std::uint64_t index,
                                    std::uint32_t substream = 0);
CurveDraw sample_curve(const FunctionalDistribution& dist, std::uint64_t index, std::uint32_t substream = 0);
double sample_noise(const FunctionalDistribution& dist, std::uint64_t index, std::uint32_t substream = 0);

enum class GridKind { Uniform, Jittered };

/// How pi_p(G) is obtained for a generated curve.
struct ProjectionMode {
  enum class Kind { Exact, Sampled };
  Kind kind = Kind::Exact;
  BasisSystem basis = BasisSystem::fourier(1);
  std::size_t samples = 100;  ///< Sampled: points per curve
  GridKind grid = GridKind::Uniform;
  double ridge = 0.0;

  static ProjectionMode exact(BasisSystem basis);
  static ProjectionMode sampled(BasisSystem basis, std::size_t samples, GridKind grid, double ridge = 0.0);
};

/// Observation grid for curve `index` (uniform, or one uniform draw per cell).
std::vector<double> sampling_grid(std::size_t samples, GridKind grid, std::uint64_t seed, std::uint32_t substream,
                                  std::uint64_t index);

/// The n draws before projection.
struct FunctionalDataset {
  Eigen::MatrixXd coefficients;  ///< n x K_max
  Eigen::VectorXd regression;    ///< F(G^i)
  Eigen::VectorXd noise;         ///< eps^i
  Eigen::VectorXd responses;     ///< Y^i = F(G^i) + eps^i
  std::vector<std::string> ids;
  std::uint64_t seed = 0;
  std::uint32_t substream = 0;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(responses.size()); }
};

struct GeneratedDataset {
  CoordDataset coords;
  FunctionalDataset reference;
  std::vector<SampledFunction> curves;  ///< filled in Sampled mode only
};

/// n i.i.d. draws projected as requested. Throws EmptyData for n == 0.
GeneratedDataset make_dataset(const FunctionalDistribution& dist, std::size_t n, const ProjectionMode& mode,
                              std::uint32_t substream = 0);

/// Samples every generated curve on its observation grid.
std::vector<SampledFunction> sample_curves(const FunctionalDistribution& dist, const FunctionalDataset& data,
                                           std::size_t samples, GridKind grid);

struct RiskEstimate {
  double rmse = 0.0;
  double se = 0.0;  ///< delta-method standard error of rmse
};

/// RMSE of prediction errors and its delta-method standard error.
RiskEstimate risk_from_errors(const Eigen::VectorXd& errors);

/// A predictor on generating coefficients (oracles, wrapped models).
using Predictor = std::function<double(const Eigen::VectorXd& coeffs)>;

/// E[Y | G] for the distribution.
Predictor conditional_expectation(const FunctionalDistribution& dist);

/// Monte Carlo estimate of C(h) on n_test fresh draws from a test sub-stream.
RiskEstimate estimate_risk(const Predictor& predictor, const FunctionalDistribution& dist, std::size_t n_test,
                           std::uint32_t substream = kTestSubstreamBase);

/// Same for an FMLP reading exact Fourier coordinates of dimension p.
RiskEstimate estimate_risk(const FmlpModel& model, const FunctionalDistribution& dist, std::size_t n_test,
                           std::size_t p, std::uint32_t substream = kTestSubstreamBase);

/// Distribution presets exercised by the tests and the example configs.
std::vector<FunctionalDistribution> shipped_distributions();

}  // namespace fmlp
