#include "fmlp/datagen.hpp"

#include <cmath>

#include "fmlp/error.hpp"
#include "fmlp/rng.hpp"
#include "format.hpp"

namespace fmlp {

TargetFunctional TargetFunctional::linear(Eigen::VectorXd w) {
  return {TargetKind::Linear, std::move(w), 1.0};
}

TargetFunctional TargetFunctional::squared_norm() { return {TargetKind::SquaredNorm, {}, 1.0}; }

TargetFunctional TargetFunctional::sine(Eigen::VectorXd w, double scale) {
  return {TargetKind::Sine, std::move(w), scale};
}

const char* to_string(TargetKind kind) noexcept {
  switch (kind) {
    case TargetKind::Linear: return "linear";
    case TargetKind::SquaredNorm: return "sqnorm";
    case TargetKind::Sine: return "sine";
  }
  return "unknown";
}

namespace {

double inner_with_weights(const Eigen::VectorXd& w, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  const Eigen::Index n = std::min(w.size(), coeffs.size());
  return w.head(n).dot(coeffs.head(n));
}

}  // namespace

double eval_target(const TargetFunctional& target, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  switch (target.kind) {
    case TargetKind::Linear: return inner_with_weights(target.w, coeffs);
    case TargetKind::SquaredNorm: return coeffs.squaredNorm();
    case TargetKind::Sine: return std::sin(target.scale * inner_with_weights(target.w, coeffs));
  }
  return 0.0;
}

double eval_target(const TargetFunctional& target, const CoordinateVector& g) {
  if (g.basis_ref.rfind("fourier:", 0) != 0) {
    throw Error(ErrorCode::BasisMismatch, "target functionals are defined on Fourier coefficients, got basis '" +
                                              g.basis_ref + "'");
  }
  return eval_target(target, g.coords);
}

double FunctionalDistribution::coefficient_sd(std::size_t k) const {
  return amplitude * std::pow(static_cast<double>(k + 1), -decay);
}

void FunctionalDistribution::validate() const {
  if (k_max == 0) throw Error(ErrorCode::InvalidDimension, "K_max must be at least 1");
  if (!(decay > 0.5) || !std::isfinite(decay)) throw Error(ErrorCode::InvalidArgument, "decay s must exceed 1/2");
  if (!(amplitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "amplitude must be nonnegative");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw Error(ErrorCode::InvalidArgument, "noise_sd must be nonnegative");
  if (!(clip_radius >= 0.0)) throw Error(ErrorCode::InvalidArgument, "clip radius must be nonnegative");
  if (target.kind != TargetKind::SquaredNorm && static_cast<std::size_t>(target.w.size()) > k_max) {
    throw Error(ErrorCode::BasisMismatch, "target weight has more coefficients than K_max");
  }
  if (!target.w.allFinite() || !std::isfinite(target.scale)) {
    throw Error(ErrorCode::InvalidArgument, "target parameters must be finite");
  }
}

StreamId coefficient_stream(std::uint32_t substream, std::uint64_t index) {
  return StreamId::make(StreamPurpose::CurveCoefficients, substream, index);
}

StreamId noise_stream(std::uint32_t substream, std::uint64_t index) {
  return StreamId::make(StreamPurpose::Noise, substream, index);
}

StreamId grid_stream(std::uint32_t substream, std::uint64_t index) {
  return StreamId::make(StreamPurpose::SamplingGrid, substream, index);
}

Eigen::VectorXd sample_coefficients(const FunctionalDistribution& dist, std::uint64_t index, std::uint32_t substream) {
  RandomStream rng(dist.seed, coefficient_stream(substream, index));
  Eigen::VectorXd xi(static_cast<Eigen::Index>(dist.k_max));
  for (std::size_t k = 0; k < dist.k_max; ++k) xi[static_cast<Eigen::Index>(k)] = dist.coefficient_sd(k) * rng.normal();
  if (dist.clip_radius > 0.0) {
    const double norm = xi.norm();
    if (norm > dist.clip_radius) xi *= dist.clip_radius / norm;
  }
  return xi;
}

CurveDraw sample_curve(const FunctionalDistribution& dist, std::uint64_t index, std::uint32_t substream) {
  CoordinateVector coeffs{sample_coefficients(dist, index, substream), "fourier:" + std::to_string(dist.k_max)};
  auto curve = reconstruction(coeffs, dist.generating_basis());
  return {std::move(coeffs), std::move(curve)};
}

double sample_noise(const FunctionalDistribution& dist, std::uint64_t index, std::uint32_t substream) {
  if (dist.noise_sd == 0.0) return 0.0;
  RandomStream rng(dist.seed, noise_stream(substream, index));
  return dist.noise_sd * rng.normal();
}

ProjectionMode ProjectionMode::exact(BasisSystem basis) {
  ProjectionMode mode;
  mode.kind = Kind::Exact;
  mode.basis = std::move(basis);
  return mode;
}

ProjectionMode ProjectionMode::sampled(BasisSystem basis, std::size_t samples, GridKind grid, double ridge) {
  ProjectionMode mode;
  mode.kind = Kind::Sampled;
  mode.basis = std::move(basis);
  mode.samples = samples;
  mode.grid = grid;
  mode.ridge = ridge;
  return mode;
}

std::vector<double> sampling_grid(std::size_t samples, GridKind grid, std::uint64_t seed, std::uint32_t substream,
                                  std::uint64_t index) {
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "sampling grid needs at least one point");
  std::vector<double> xs(samples);
  const auto m = static_cast<double>(samples);
  if (grid == GridKind::Uniform) {
    if (samples == 1) {
      xs[0] = 0.5;
    } else {
      for (std::size_t j = 0; j < samples; ++j) xs[j] = static_cast<double>(j) / (m - 1.0);
    }
    return xs;
  }
  RandomStream rng(seed, grid_stream(substream, index));
  for (std::size_t j = 0; j < samples; ++j) xs[j] = (static_cast<double>(j) + rng.uniform()) / m;
  return xs;
}

std::vector<SampledFunction> sample_curves(const FunctionalDistribution& dist, const FunctionalDataset& data,
                                           std::size_t samples, GridKind grid) {
  const BasisSystem generator = dist.generating_basis();
  std::vector<SampledFunction> curves(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& curve = curves[i];
    curve.id = data.ids[i];
    curve.xs = sampling_grid(samples, grid, dist.seed, data.substream, i);
    const Eigen::VectorXd values = generator.design_matrix(curve.xs) * data.coefficients.row(static_cast<Eigen::Index>(i)).transpose();
    curve.values.assign(values.data(), values.data() + values.size());
  }
  return curves;
}

GeneratedDataset make_dataset(const FunctionalDistribution& dist, std::size_t n, const ProjectionMode& mode,
                              std::uint32_t substream) {
  dist.validate();
  if (n == 0) throw Error(ErrorCode::EmptyData, "dataset size must be positive");
  if (mode.kind == ProjectionMode::Kind::Sampled && mode.samples < mode.basis.dim()) {
    throw Error(ErrorCode::Underdetermined, "sampled projection needs at least p points per curve");
  }

  GeneratedDataset out;
  FunctionalDataset& ref = out.reference;
  const auto rows = static_cast<Eigen::Index>(n);
  ref.coefficients.resize(rows, static_cast<Eigen::Index>(dist.k_max));
  ref.regression.resize(rows);
  ref.noise.resize(rows);
  ref.ids.resize(n);
  ref.seed = dist.seed;
  ref.substream = substream;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    ref.coefficients.row(r) = sample_coefficients(dist, i, substream).transpose();
    ref.regression[r] = eval_target(dist.target, ref.coefficients.row(r).transpose());
    ref.noise[r] = sample_noise(dist, i, substream);
    ref.ids[i] = std::to_string(i);
  }
  ref.responses = ref.regression + ref.noise;

  CoordDataset& coords = out.coords;
  coords.targets = ref.responses;
  coords.ids = ref.ids;
  coords.basis_ref = mode.basis.id();
  coords.seed = dist.seed;
  if (mode.kind == ProjectionMode::Kind::Exact) {
    // Projection is linear, so pi_p(G) = M xi with M the change of basis.
    const Eigen::MatrixXd change = change_of_basis(dist.generating_basis(), mode.basis);
    coords.inputs = ref.coefficients * change.transpose();
  } else {
    out.curves = sample_curves(dist, ref, mode.samples, mode.grid);
    coords.inputs.resize(rows, static_cast<Eigen::Index>(mode.basis.dim()));
    if (mode.grid == GridKind::Uniform) {
      // One shared grid: a single design matrix for every curve.
      const Eigen::MatrixXd design = mode.basis.design_matrix(out.curves.front().xs);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& values = out.curves[i].values;
        const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
        coords.inputs.row(static_cast<Eigen::Index>(i)) = least_squares_coords(design, v, mode.ridge).transpose();
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        coords.inputs.row(static_cast<Eigen::Index>(i)) =
            project_sampled(out.curves[i], mode.basis, mode.ridge).coords.transpose();
      }
    }
  }
  return out;
}

RiskEstimate risk_from_errors(const Eigen::VectorXd& errors) {
  const auto n = errors.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "risk estimation needs at least two test draws");
  const Eigen::ArrayXd squared = errors.array().square();
  const double mse = squared.mean();
  const double variance = (squared - mse).square().sum() / static_cast<double>(n - 1);
  RiskEstimate out;
  out.rmse = std::sqrt(mse);
  const double se_mse = std::sqrt(variance / static_cast<double>(n));
  out.se = out.rmse > 0.0 ? se_mse / (2.0 * out.rmse) : 0.0;
  return out;
}

Predictor conditional_expectation(const FunctionalDistribution& dist) {
  return [target = dist.target](const Eigen::VectorXd& coeffs) { return eval_target(target, coeffs); };
}

RiskEstimate estimate_risk(const Predictor& predictor, const FunctionalDistribution& dist, std::size_t n_test,
                           std::uint32_t substream) {
  dist.validate();
  if (n_test < 2) throw Error(ErrorCode::InvalidArgument, "risk estimation needs at least two test draws");
  Eigen::VectorXd errors(static_cast<Eigen::Index>(n_test));
  for (std::size_t i = 0; i < n_test; ++i) {
    const Eigen::VectorXd xi = sample_coefficients(dist, i, substream);
    const double y = eval_target(dist.target, xi) + sample_noise(dist, i, substream);
    errors[static_cast<Eigen::Index>(i)] = predictor(xi) - y;
  }
  return risk_from_errors(errors);
}

RiskEstimate estimate_risk(const FmlpModel& model, const FunctionalDistribution& dist, std::size_t n_test,
                           std::size_t p, std::uint32_t substream) {
  if (n_test < 2) throw Error(ErrorCode::InvalidArgument, "risk estimation needs at least two test draws");
  if (model.input_dim() != p) throw Error(ErrorCode::Shape, "model input dimension does not match p");
  const GeneratedDataset test = make_dataset(dist, n_test, ProjectionMode::exact(BasisSystem::fourier(p)), substream);
  return risk_from_errors(forward_batch(model, test.coords.inputs) - test.coords.targets);
}

std::vector<FunctionalDistribution> shipped_distributions() {
  std::vector<FunctionalDistribution> out;

  FunctionalDistribution linear;
  linear.target = TargetFunctional::linear((Eigen::VectorXd(3) << 1.0, 0.5, -0.5).finished());
  out.push_back(linear);

  FunctionalDistribution sqnorm;
  sqnorm.target = TargetFunctional::squared_norm();
  sqnorm.noise_sd = 0.0;
  sqnorm.clip_radius = 3.0;
  out.push_back(sqnorm);

  FunctionalDistribution sine;
  sine.target = TargetFunctional::sine((Eigen::VectorXd(2) << 1.0, 1.0).finished(), 0.75);
  out.push_back(sine);

  FunctionalDistribution null_target;
  null_target.target = TargetFunctional::linear(Eigen::VectorXd());
  null_target.noise_sd = 1.0;
  out.push_back(null_target);

  return out;
}

}  // namespace fmlp
