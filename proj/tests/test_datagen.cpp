#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fmlp/datagen.hpp"
#include "fmlp/error.hpp"

using namespace fmlp;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Internal;
}

double sample_variance(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(SampleCurve, ZeroAmplitudeGivesZeroFunction) {
  FunctionalDistribution dist;
  dist.amplitude = 0.0;
  const CurveDraw draw = sample_curve(dist, 3);
  EXPECT_EQ(draw.coeffs.coords.cwiseAbs().maxCoeff(), 0.0);
  for (double x : {0.0, 0.4, 1.0}) EXPECT_EQ(draw.curve(x), 0.0);
}

TEST(SampleCurve, DeterministicPerIndex) {
  FunctionalDistribution dist;
  dist.seed = 99;
  const Eigen::VectorXd a = sample_coefficients(dist, 17);
  const Eigen::VectorXd b = sample_coefficients(dist, 17);
  EXPECT_TRUE((a.array() == b.array()).all());
  EXPECT_FALSE((a.array() == sample_coefficients(dist, 18).array()).all());
  EXPECT_FALSE((a.array() == sample_coefficients(dist, 17, 1).array()).all());
  const CurveDraw draw = sample_curve(dist, 17);
  EXPECT_TRUE((draw.coeffs.coords.array() == a.array()).all());
  EXPECT_EQ(draw.coeffs.basis_ref, "fourier:25");
}

TEST(SampleCurve, CurveMatchesCoefficients) {
  FunctionalDistribution dist;
  const CurveDraw draw = sample_curve(dist, 0);
  const BasisSystem b = dist.generating_basis();
  EXPECT_NEAR(draw.curve(0.3), reconstruct(draw.coeffs, b, 0.3), 1e-14);
  EXPECT_NEAR(l2_norm(draw.curve), draw.coeffs.norm(), 1e-9);
}

TEST(SampleCurve, CoefficientVarianceFollowsDecay) {
  FunctionalDistribution dist;
  dist.decay = 1.0;
  dist.k_max = 10;
  Eigen::VectorXd third(10000);
  for (Eigen::Index i = 0; i < third.size(); ++i) third[i] = sample_coefficients(dist, static_cast<std::uint64_t>(i))[2];
  EXPECT_NEAR(sample_variance(third), 1.0 / 9.0, 0.05 / 9.0);
  EXPECT_NEAR(dist.coefficient_sd(2), 1.0 / 3.0, 1e-15);
}

TEST(SampleCurve, ClippingStaysInBall) {
  FunctionalDistribution dist;
  dist.amplitude = 5.0;
  dist.clip_radius = 3.0;
  for (std::uint64_t i = 0; i < 500; ++i) EXPECT_LE(sample_coefficients(dist, i).norm(), 3.0 + 1e-12);
}

TEST(EvalTarget, Examples) {
  EXPECT_DOUBLE_EQ(eval_target(TargetFunctional::squared_norm(), Eigen::VectorXd(Eigen::Vector3d(2, 0, 0))), 4.0);
  EXPECT_DOUBLE_EQ(eval_target(TargetFunctional::linear(Eigen::Vector3d(0, 1, 0)), Eigen::VectorXd(Eigen::Vector3d(5, 7, 0))),
                   7.0);
  EXPECT_DOUBLE_EQ(eval_target(TargetFunctional::linear(Eigen::Vector2d(1, 0.5)), Eigen::VectorXd(Eigen::Vector2d(2, 2))),
                   3.0);
  EXPECT_NEAR(eval_target(TargetFunctional::sine(Eigen::Vector2d(1, 1), 0.5), Eigen::VectorXd(Eigen::Vector2d(1, 2))),
              std::sin(1.5), 1e-15);
}

TEST(EvalTarget, LinearEqualsQuadratureInnerProduct) {
  const BasisSystem b = BasisSystem::fourier(2);
  const auto w = [&](double x) { return b.eval(0, x) + 0.5 * b.eval(1, x); };
  const auto g = [&](double x) { return 2 * b.eval(0, x) + 2 * b.eval(1, x); };
  const double integral = reference_quadrature().integrate([&](double x) { return w(x) * g(x); });
  EXPECT_NEAR(integral, 3.0, 1e-9);
}

TEST(EvalTarget, BasisMismatch) {
  const CoordinateVector g{Eigen::Vector2d(1, 1), "bspline:1:"};
  EXPECT_EQ(code_of([&] { eval_target(TargetFunctional::squared_norm(), g); }), ErrorCode::BasisMismatch);
  EXPECT_DOUBLE_EQ(eval_target(TargetFunctional::squared_norm(), CoordinateVector{Eigen::Vector2d(1, 1), "fourier:2"}),
                   2.0);
}

TEST(MakeDataset, SquaredNormIdentity) {
  FunctionalDistribution dist;
  dist.noise_sd = 0.0;
  dist.target = TargetFunctional::squared_norm();
  const GeneratedDataset data = make_dataset(dist, 200, ProjectionMode::exact(BasisSystem::fourier(dist.k_max)));
  for (Eigen::Index i = 0; i < 200; ++i) {
    EXPECT_NEAR(data.coords.targets[i], data.coords.inputs.row(i).squaredNorm(), 1e-9);
  }
}

TEST(MakeDataset, EmptyRejected) {
  EXPECT_EQ(code_of([] { make_dataset(FunctionalDistribution{}, 0, ProjectionMode::exact(BasisSystem::fourier(3))); }),
            ErrorCode::EmptyData);
  EXPECT_EQ(code_of([] {
              make_dataset(FunctionalDistribution{}, 5,
                           ProjectionMode::sampled(BasisSystem::fourier(5), 4, GridKind::Uniform));
            }),
            ErrorCode::Underdetermined);
}

TEST(MakeDataset, NoiseStandardDeviation) {
  FunctionalDistribution dist;
  dist.noise_sd = 0.3;
  dist.target = TargetFunctional::linear(Eigen::Vector3d(1, 0.5, -0.5));
  const GeneratedDataset data = make_dataset(dist, 100000, ProjectionMode::exact(BasisSystem::fourier(3)));
  const Eigen::VectorXd diff = data.reference.responses - data.reference.regression;
  EXPECT_NEAR(std::sqrt(sample_variance(diff)), 0.3, 0.02 * 0.3);
}

TEST(MakeDataset, Deterministic) {
  FunctionalDistribution dist;
  dist.seed = 5;
  for (const ProjectionMode& mode : {ProjectionMode::exact(BasisSystem::fourier(4)),
                                     ProjectionMode::sampled(BasisSystem::bspline(2, {0.5}), 40, GridKind::Jittered)}) {
    const GeneratedDataset a = make_dataset(dist, 50, mode, 3);
    const GeneratedDataset b = make_dataset(dist, 50, mode, 3);
    EXPECT_TRUE((a.coords.inputs.array() == b.coords.inputs.array()).all());
    EXPECT_TRUE((a.coords.targets.array() == b.coords.targets.array()).all());
  }
}

TEST(MakeDataset, RowsDoNotDependOnDatasetSize) {
  FunctionalDistribution dist;
  const auto mode = ProjectionMode::exact(BasisSystem::fourier(4));
  const GeneratedDataset small = make_dataset(dist, 10, mode);
  const GeneratedDataset large = make_dataset(dist, 30, mode);
  EXPECT_TRUE((small.reference.coefficients.array() == large.reference.coefficients.topRows(10).array()).all());
  EXPECT_LE((small.coords.inputs - large.coords.inputs.topRows(10)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MakeDataset, ExactInputsEqualCoefficientsWhenPCoversKmax) {
  FunctionalDistribution dist;
  dist.k_max = 8;
  for (std::size_t p : {8u, 11u}) {
    const GeneratedDataset data = make_dataset(dist, 100, ProjectionMode::exact(BasisSystem::fourier(p)));
    EXPECT_LE((data.coords.inputs.leftCols(8) - data.reference.coefficients).cwiseAbs().maxCoeff(), 1e-9);
    if (p > 8) EXPECT_LE(data.coords.inputs.rightCols(static_cast<Eigen::Index>(p - 8)).cwiseAbs().maxCoeff(), 1e-9);
  }
  const GeneratedDataset truncated = make_dataset(dist, 100, ProjectionMode::exact(BasisSystem::fourier(3)));
  EXPECT_LE((truncated.coords.inputs - truncated.reference.coefficients.leftCols(3)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MakeDataset, SampledModeApproachesExact) {
  FunctionalDistribution dist;
  dist.k_max = 5;
  const auto exact = make_dataset(dist, 20, ProjectionMode::exact(BasisSystem::fourier(5)));
  const auto sampled = make_dataset(dist, 20, ProjectionMode::sampled(BasisSystem::fourier(5), 60, GridKind::Jittered));
  EXPECT_LE((exact.coords.inputs - sampled.coords.inputs).cwiseAbs().maxCoeff(), 1e-9);
  ASSERT_EQ(sampled.curves.size(), 20u);
  EXPECT_EQ(sampled.curves[0].size(), 60u);
}

TEST(MakeDataset, NoiseIndependentOfInputs) {
  FunctionalDistribution dist;
  const std::size_t n = 10000;
  const GeneratedDataset data = make_dataset(dist, n, ProjectionMode::exact(BasisSystem::fourier(5)));
  const Eigen::VectorXd eps = data.reference.noise.array() - data.reference.noise.mean();
  for (Eigen::Index k = 0; k < 5; ++k) {
    const Eigen::VectorXd x = data.coords.inputs.col(k).array() - data.coords.inputs.col(k).mean();
    const double corr = eps.dot(x) / (eps.norm() * x.norm());
    EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST(Grid, UniformAndJittered) {
  const std::vector<double> u = sampling_grid(5, GridKind::Uniform, 1, 0, 0);
  EXPECT_EQ(u, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  const std::vector<double> j = sampling_grid(10, GridKind::Jittered, 1, 0, 3);
  for (std::size_t i = 0; i < j.size(); ++i) {
    EXPECT_GT(j[i], i / 10.0);
    EXPECT_LT(j[i], (i + 1) / 10.0);
  }
  EXPECT_NE(j, sampling_grid(10, GridKind::Jittered, 1, 0, 4));
}

TEST(Risk, OracleAchievesNoiseLevel) {
  for (const FunctionalDistribution& dist : shipped_distributions()) {
    const RiskEstimate r = estimate_risk(conditional_expectation(dist), dist, 20000);
    EXPECT_LE(std::abs(r.rmse - dist.noise_sd), 3 * r.se + 1e-12) << to_string(dist.target.kind);
  }
}

TEST(Risk, ZeroModelOnPureNoise) {
  FunctionalDistribution dist;
  dist.target = TargetFunctional::linear(Eigen::VectorXd());
  dist.noise_sd = 1.0;
  const RiskEstimate r = estimate_risk(FmlpModel::zeros(3, 1, 1.0), dist, 20000, 3);
  EXPECT_LE(std::abs(r.rmse - 1.0), 3 * r.se);
}

TEST(Risk, ZeroModelOnSquaredNormMatchesFourthMoment) {
  // E[(sum xi^2)^2] = (sum s_k^2)^2 + 2 sum s_k^4 for independent centred Gaussians.
  FunctionalDistribution dist;
  dist.k_max = 6;
  dist.decay = 0.75;
  dist.noise_sd = 0.5;
  dist.target = TargetFunctional::squared_norm();
  double s2 = 0.0, s4 = 0.0;
  for (std::size_t k = 0; k < dist.k_max; ++k) {
    const double v = std::pow(dist.coefficient_sd(k), 2);
    s2 += v;
    s4 += v * v;
  }
  const double expected = 0.25 + s2 * s2 + 2 * s4;

  const RiskEstimate r = estimate_risk(FmlpModel::zeros(2, 1, 1.0), dist, 100000, 2);
  EXPECT_NEAR(r.rmse * r.rmse, expected, 0.05 * expected);

  // Brute-force check of the closed form from raw draws.
  double brute = 0.0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = sample_coefficients(dist, i, 77).squaredNorm();
    brute += q * q;
  }
  EXPECT_NEAR(brute / n, s2 * s2 + 2 * s4, 0.05 * (s2 * s2 + 2 * s4));
}

TEST(Risk, StandardErrorFormula) {
  const Eigen::VectorXd errors = Eigen::Vector4d(1, -1, 2, -2);
  const RiskEstimate r = risk_from_errors(errors);
  EXPECT_NEAR(r.rmse, std::sqrt(2.5), 1e-15);
  // squared errors 1,1,4,4: sample variance 3, se of mean sqrt(3/4), delta method /(2 rmse)
  EXPECT_NEAR(r.se, std::sqrt(0.75) / (2 * std::sqrt(2.5)), 1e-15);
  EXPECT_EQ(code_of([] { risk_from_errors(Eigen::VectorXd::Ones(1)); }), ErrorCode::InvalidArgument);
}

TEST(Distribution, Validation) {
  FunctionalDistribution dist;
  dist.decay = 0.5;
  EXPECT_EQ(code_of([&] { dist.validate(); }), ErrorCode::InvalidArgument);
  dist = {};
  dist.k_max = 0;
  EXPECT_EQ(code_of([&] { dist.validate(); }), ErrorCode::InvalidDimension);
  dist = {};
  dist.k_max = 2;
  dist.target = TargetFunctional::linear(Eigen::Vector3d(1, 1, 1));
  EXPECT_EQ(code_of([&] { dist.validate(); }), ErrorCode::BasisMismatch);
}

TEST(Streams, TestSubstreamsAreSeparate) {
  EXPECT_NE(coefficient_stream(0, 5), coefficient_stream(kTestSubstreamBase, 5));
  EXPECT_NE(coefficient_stream(0, 5), noise_stream(0, 5));
  EXPECT_NE(noise_stream(0, 5), grid_stream(0, 5));
}
