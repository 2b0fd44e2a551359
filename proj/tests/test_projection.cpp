#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "fmlp/error.hpp"
#include "fmlp/projection.hpp"
#include "fmlp/rng.hpp"

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

// Random expansion on Fourier(k) with decaying coefficients; returns the
// function and its coefficients.
struct RandomCurve {
  Eigen::VectorXd coeffs;
  EvaluableFunction g;
};

RandomCurve random_curve(RandomStream& rng, std::size_t k) {
  RandomCurve out;
  out.coeffs.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) out.coeffs[static_cast<Eigen::Index>(i)] = rng.normal() / (1.0 + i);
  out.g = reconstruction(CoordinateVector{out.coeffs, "fourier:" + std::to_string(k)}, BasisSystem::fourier(k));
  return out;
}

// A function outside every Fourier space.
double ramp(double x) { return x; }

}  // namespace

TEST(ProjectExact, BasisFunctionGivesUnitVector) {
  const BasisSystem b = BasisSystem::fourier(3);
  const CoordinateVector c = project_exact([&](double x) { return b.eval(1, x); }, b);
  EXPECT_NEAR(c.coords[0], 0.0, 1e-10);
  EXPECT_NEAR(c.coords[1], 1.0, 1e-10);
  EXPECT_NEAR(c.coords[2], 0.0, 1e-10);
  EXPECT_EQ(c.basis_ref, "fourier:3");
}

TEST(ProjectExact, FunctionInSpace) {
  const BasisSystem b = BasisSystem::fourier(2);
  const CoordinateVector c =
      project_exact([](double x) { return 2 + 3 * std::sqrt(2.0) * std::cos(2 * std::numbers::pi * x); }, b);
  EXPECT_NEAR(c.coords[0], 2.0, 1e-10);
  EXPECT_NEAR(c.coords[1], 3.0, 1e-10);
}

TEST(ProjectExact, RampGolden) {
  const CoordinateVector c = project_exact(ramp, BasisSystem::fourier(3));
  EXPECT_NEAR(c.coords[0], 0.5, 1e-9);
  EXPECT_NEAR(c.coords[1], 0.0, 1e-9);
  EXPECT_NEAR(c.coords[2], -std::sqrt(2.0) / (2 * std::numbers::pi), 1e-9);
}

TEST(ProjectExact, RampMatchesClosedFormForHigherFrequencies) {
  // <x, sqrt2 cos(2 pi j x)> = 0 and <x, sqrt2 sin(2 pi j x)> = -sqrt2 / (2 pi j).
  const CoordinateVector c = project_exact(ramp, BasisSystem::fourier(11));
  for (int j = 1; j <= 5; ++j) {
    EXPECT_NEAR(c.coords[2 * j - 1], 0.0, 1e-9);
    EXPECT_NEAR(c.coords[2 * j], -std::sqrt(2.0) / (2 * std::numbers::pi * j), 1e-9);
  }
}

TEST(ProjectExact, NonFiniteEvaluationRejected) {
  EXPECT_EQ(code_of([] { project_exact([](double x) { return x < 0.5 ? 1.0 : NAN; }, BasisSystem::fourier(2)); }),
            ErrorCode::Evaluation);
  EXPECT_EQ(code_of([] { project_exact([](double x) { return 1.0 / (x - x); }, BasisSystem::fourier(2)); }),
            ErrorCode::Evaluation);
}

TEST(ProjectSampled, InSpaceSamples) {
  const BasisSystem b = BasisSystem::fourier(3);
  SampledFunction f;
  for (int j = 0; j < 200; ++j) {
    const double x = j / 199.0;
    f.xs.push_back(x);
    f.values.push_back(b.eval(1, x));
  }
  const CoordinateVector c = project_sampled(f, b);
  EXPECT_NEAR(c.coords[0], 0.0, 1e-6);
  EXPECT_NEAR(c.coords[1], 1.0, 1e-6);
  EXPECT_NEAR(c.coords[2], 0.0, 1e-6);
}

TEST(ProjectSampled, TooFewSamples) {
  SampledFunction f{"a", {0.1, 0.5}, {1.0, 2.0}};
  EXPECT_EQ(code_of([&] { project_sampled(f, BasisSystem::fourier(3)); }), ErrorCode::Underdetermined);
}

TEST(ProjectSampled, LinearInDegreeOneSplines) {
  const BasisSystem b = BasisSystem::bspline(1, {});
  SampledFunction f;
  f.id = "line";
  f.xs = {0.0, 0.1, 0.35, 0.8, 1.0};
  for (double x : f.xs) f.values.push_back(3 * x + 1);
  const CoordinateVector c = project_sampled(f, b);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(reconstruct(c, b, f.xs[j]), f.values[j], 1e-9);
}

TEST(ProjectSampled, RankDeficientNeedsRidge) {
  // Both samples inside the first panel: the hats on [0.5, 1] see nothing.
  const BasisSystem b = BasisSystem::bspline(1, {0.5});
  SampledFunction f{"c", {0.1, 0.2, 0.3, 0.4}, {1, 2, 3, 4}};
  EXPECT_EQ(code_of([&] { project_sampled(f, b); }), ErrorCode::Conditioning);
  const CoordinateVector c = project_sampled(f, b, 1e-6);
  EXPECT_TRUE(c.coords.allFinite());
}

TEST(ProjectSampled, RidgeShrinks) {
  const BasisSystem b = BasisSystem::fourier(3);
  SampledFunction f;
  for (int j = 0; j < 30; ++j) {
    f.xs.push_back(j / 29.0);
    f.values.push_back(1.0 + f.xs.back());
  }
  double previous = project_sampled(f, b).norm();
  for (double ridge : {0.1, 1.0, 10.0, 100.0}) {
    const double norm = project_sampled(f, b, ridge).norm();
    EXPECT_LT(norm, previous);
    previous = norm;
  }
}

TEST(ProjectSampled, RejectsInvalidSamples) {
  const BasisSystem b = BasisSystem::fourier(1);
  EXPECT_EQ(code_of([&] { project_sampled(SampledFunction{"a", {0.2, 0.1}, {1, 1}}, b); }), ErrorCode::Ordering);
  EXPECT_EQ(code_of([&] { project_sampled(SampledFunction{"a", {0.2, 0.2}, {1, 1}}, b); }), ErrorCode::Ordering);
  EXPECT_EQ(code_of([&] { project_sampled(SampledFunction{"a", {0.2}, {1, 1}}, b); }), ErrorCode::Shape);
  EXPECT_EQ(code_of([&] { project_sampled(SampledFunction{"a", {}, {}}, b); }), ErrorCode::EmptyData);
  EXPECT_EQ(code_of([&] { project_sampled(SampledFunction{"a", {0.2, 1.2}, {1, 1}}, b); }), ErrorCode::Domain);
  EXPECT_EQ(code_of([&] { project_sampled(SampledFunction{"a", {0.2, 0.4}, {1, 1}}, b, -1.0); }),
            ErrorCode::InvalidArgument);
}

TEST(Reconstruct, Examples) {
  const BasisSystem b = BasisSystem::fourier(2);
  EXPECT_NEAR(reconstruct(CoordinateVector{Eigen::Vector2d(2, 3), b.id()}, b, 0.0), 2 + 3 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(reconstruct(CoordinateVector{Eigen::Vector2d(2, 3), b.id()}, b, 0.0), 6.242641, 1e-6);
  for (double x : {0.0, 0.3, 0.77, 1.0}) {
    EXPECT_EQ(reconstruct(CoordinateVector{Eigen::Vector2d::Zero(), b.id()}, b, x), 0.0);
  }
  const CoordinateVector c = project_exact([&](double x) { return b.eval(0, x); }, b);
  for (double x : {0.0, 0.42, 1.0}) EXPECT_NEAR(reconstruct(c, b, x), 1.0, 1e-10);
}

TEST(Reconstruct, Errors) {
  const BasisSystem b = BasisSystem::fourier(2);
  EXPECT_EQ(code_of([&] { reconstruct(CoordinateVector{Eigen::Vector2d(1, 1), b.id()}, b, 1.5); }), ErrorCode::Domain);
  EXPECT_EQ(code_of([&] { reconstruct(CoordinateVector{Eigen::Vector3d(1, 1, 1), "fourier:3"}, b, 0.5); }),
            ErrorCode::Shape);
}

TEST(Residual, Examples) {
  const BasisSystem b1 = BasisSystem::fourier(1);
  const auto phi = [&](double x) { return b1.eval(0, x); };
  EXPECT_NEAR(residual_norm(phi, project_exact(phi, b1), b1), 0.0, 1e-9);
  EXPECT_NEAR(residual_norm(ramp, project_exact(ramp, b1), b1), std::sqrt(1.0 / 12.0), 1e-8);
  EXPECT_NEAR(residual_norm(ramp, project_exact(ramp, b1), b1), 0.288675, 1e-6);
  double previous = INFINITY;
  for (std::size_t p : {1u, 3u, 5u, 7u}) {
    const BasisSystem b = BasisSystem::fourier(p);
    const double r = residual_norm(ramp, project_exact(ramp, b), b);
    EXPECT_LT(r, previous);
    previous = r;
  }
}

TEST(Residual, PythagorasForExactProjection) {
  for (std::size_t p : {1u, 2u, 5u, 9u}) {
    const BasisSystem b = BasisSystem::fourier(p);
    const CoordinateVector c = project_exact(ramp, b);
    const double g2 = 1.0 / 3.0;
    EXPECT_NEAR(residual_norm(ramp, c, b), std::sqrt(g2 - c.coords.squaredNorm()), 1e-9);
  }
}

TEST(ProjectionProperties, Contraction) {
  RandomStream rng(1, StreamId::make(StreamPurpose::Fuzz, 10, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform() * 12);
    const RandomCurve curve = random_curve(rng, 25);
    const CoordinateVector c = project_exact(curve.g, BasisSystem::fourier(p));
    EXPECT_LE(c.norm(), curve.coeffs.norm() + 1e-9);
    EXPECT_LE(c.norm(), l2_norm(curve.g) + 1e-9);
  }
}

TEST(ProjectionProperties, ContractionOnSplines) {
  RandomStream rng(2, StreamId::make(StreamPurpose::Fuzz, 11, 0));
  const BasisSystem b = BasisSystem::bspline(3, {0.2, 0.45, 0.5, 0.9});
  for (int trial = 0; trial < 100; ++trial) {
    const RandomCurve curve = random_curve(rng, 25);
    EXPECT_LE(project_exact(curve.g, b).norm(), curve.coeffs.norm() + 1e-9);
  }
}

TEST(ProjectionProperties, LipschitzOne) {
  RandomStream rng(3, StreamId::make(StreamPurpose::Fuzz, 12, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const BasisSystem b = trial % 2 ? BasisSystem::fourier(1 + trial % 9) : BasisSystem::bspline(2, {0.3, 0.6});
    const RandomCurve f = random_curve(rng, 25);
    const RandomCurve g = random_curve(rng, 25);
    const auto diff = [&](double x) { return f.g(x) - g.g(x); };
    const double lhs = (project_exact(f.g, b).coords - project_exact(g.g, b).coords).norm();
    EXPECT_LE(lhs, l2_norm(diff) + 1e-9);
  }
}

TEST(ProjectionProperties, FourierNestedness) {
  RandomStream rng(4, StreamId::make(StreamPurpose::Fuzz, 13, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 1 + static_cast<std::size_t>(trial % 15);
    const RandomCurve curve = random_curve(rng, 25);
    const Eigen::VectorXd small = project_exact(curve.g, BasisSystem::fourier(p)).coords;
    const Eigen::VectorXd large = project_exact(curve.g, BasisSystem::fourier(p + 1)).coords;
    EXPECT_LE((large.head(static_cast<Eigen::Index>(p)) - small).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ProjectionProperties, Idempotence) {
  RandomStream rng(5, StreamId::make(StreamPurpose::Fuzz, 14, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const BasisSystem b = trial % 3 ? BasisSystem::fourier(1 + trial % 11) : BasisSystem::bspline(3, {0.25, 0.5});
    CoordinateVector c{Eigen::VectorXd(b.dim()), b.id()};
    for (Eigen::Index k = 0; k < c.coords.size(); ++k) c.coords[k] = rng.normal();
    const CoordinateVector again = project_exact(reconstruction(c, b), b);
    EXPECT_LE((again.coords - c.coords).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ProjectionProperties, MonotoneResidual) {
  RandomStream rng(6, StreamId::make(StreamPurpose::Fuzz, 15, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const RandomCurve curve = random_curve(rng, 25);
    double previous = INFINITY;
    for (std::size_t p = 1; p <= 24; p += 1 + trial % 3) {
      const BasisSystem b = BasisSystem::fourier(p);
      const double r = residual_norm(curve.g, project_exact(curve.g, b), b);
      EXPECT_LE(r, previous + 1e-12);
      previous = r;
    }
  }
}

TEST(ProjectionProperties, StrictlyDecreasingOutsideEverySpace) {
  double previous = INFINITY;
  const auto g = [](double x) { return std::exp(x) + x * x; };
  for (std::size_t p = 1; p <= 15; p += 2) {
    const BasisSystem b = BasisSystem::fourier(p);
    const double r = residual_norm(g, project_exact(g, b), b);
    EXPECT_LT(r, previous);
    previous = r;
  }
}

TEST(ProjectionProperties, LeastSquaresMatchesExactInSpace) {
  RandomStream rng(7, StreamId::make(StreamPurpose::Fuzz, 16, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 1 + static_cast<std::size_t>(trial % 9);
    const BasisSystem b = BasisSystem::fourier(p);
    const RandomCurve curve = random_curve(rng, p);
    SampledFunction f;
    const std::size_t m = 10 * p + 1;
    for (std::size_t j = 0; j < m; ++j) {
      f.xs.push_back(static_cast<double>(j) / static_cast<double>(m - 1));
      f.values.push_back(curve.g(f.xs.back()));
    }
    const Eigen::VectorXd ls = project_sampled(f, b).coords;
    EXPECT_LE((ls - project_exact(curve.g, b).coords).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(ChangeOfBasis, FourierTruncation) {
  const Eigen::MatrixXd m = change_of_basis(BasisSystem::fourier(5), BasisSystem::fourier(3));
  ASSERT_EQ(m.rows(), 3);
  ASSERT_EQ(m.cols(), 5);
  EXPECT_LE((m.leftCols(3) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(m.rightCols(2).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Projection, ConcurrentCallsOnSharedBasis) {
  const BasisSystem b = BasisSystem::bspline(3, {0.25, 0.5, 0.75});
  const Eigen::VectorXd serial = project_exact(ramp, b).coords;
  std::vector<Eigen::VectorXd> results(8);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < results.size(); ++t) {
    threads.emplace_back([&, t] { results[t] = project_exact(ramp, b).coords; });
  }
  for (auto& t : threads) t.join();
  for (const auto& r : results) EXPECT_TRUE((r.array() == serial.array()).all());
}
