// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for ctest).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fmlp/basis.hpp"
#include "fmlp/datagen.hpp"
#include "fmlp/harness.hpp"
#include "fmlp/ingest.hpp"
#include "fmlp/network.hpp"
#include "fmlp/projection.hpp"
#include "fmlp/rng.hpp"

using namespace fmlp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), f, v);
  return buffer;
}

fs::path config_path(const char* name) { return fs::path(FMLP_CONFIG_DIR) / name; }

std::string csv(const ResultsTable& t) {
  std::ostringstream out;
  write_results(out, t);
  return out.str();
}

Eigen::VectorXd random_coeffs(RandomStream& rng, std::size_t k) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = rng.normal() / (1.0 + static_cast<double>(i));
  return c;
}

EvaluableFunction expansion(const Eigen::VectorXd& c) {
  return reconstruction(CoordinateVector{c, "fourier:" + std::to_string(c.size())},
                        BasisSystem::fourier(static_cast<std::size_t>(c.size())));
}

Outcome orthonormality() {
  double worst = 0.0;
  auto check = [&](const BasisSystem& b) {
    const Eigen::MatrixXd g = gram_matrix(b, reference_quadrature());
    worst = std::max(worst, (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
  };
  for (std::size_t p = 1; p <= 16; ++p) check(BasisSystem::fourier(p));
  RandomStream rng(1, StreamId::make(StreamPurpose::Fuzz, 100, 0));
  int splines = 0;
  for (int degree = 1; degree <= 3; ++degree) {
    for (int count = 0; count <= 8; ++count) {
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> knots;
        for (int i = 0; i < count; ++i) knots.push_back(rng.uniform(0.02, 0.98));
        std::sort(knots.begin(), knots.end());
        check(BasisSystem::bspline(degree, knots));
        ++splines;
      }
    }
    check(BasisSystem::bspline(degree, {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875}));
  }
  return {worst < 1e-8, "max |G - I| = " + fmt("%.2e", worst) + " over 16 Fourier and " +
                            std::to_string(splines + 3) + " spline systems"};
}

Outcome projection_properties() {
  RandomStream rng(2, StreamId::make(StreamPurpose::Fuzz, 101, 0));
  const int trials = 100;
  int contraction = 0, lipschitz = 0, nested = 0, idempotent = 0, monotone = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t p = 1 + static_cast<std::size_t>(t % 15);
    const BasisSystem b = BasisSystem::fourier(p);
    const Eigen::VectorXd cf = random_coeffs(rng, 25);
    const Eigen::VectorXd cg = random_coeffs(rng, 25);
    const EvaluableFunction f = expansion(cf);
    const EvaluableFunction g = expansion(cg);

    const CoordinateVector pf = project_exact(f, b);
    if (pf.norm() <= l2_norm(f) + 1e-9) ++contraction;

    const double lhs = (pf.coords - project_exact(g, b).coords).norm();
    if (lhs <= l2_norm([&](double x) { return f(x) - g(x); }) + 1e-9) ++lipschitz;

    const Eigen::VectorXd next = project_exact(f, BasisSystem::fourier(p + 1)).coords;
    if ((next.head(static_cast<Eigen::Index>(p)) - pf.coords).cwiseAbs().maxCoeff() <= 1e-12) ++nested;

    CoordinateVector c{random_coeffs(rng, p), b.id()};
    if ((project_exact(reconstruction(c, b), b).coords - c.coords).cwiseAbs().maxCoeff() <= 1e-9) ++idempotent;

    bool ok = true;
    double previous = INFINITY;
    for (std::size_t q = 1; q <= 25; q += 2) {
      const BasisSystem bq = BasisSystem::fourier(q);
      const double r = residual_norm(f, project_exact(f, bq), bq);
      ok = ok && r <= previous + 1e-12;
      previous = r;
    }
    if (ok) ++monotone;
  }
  const bool pass = contraction == trials && lipschitz == trials && nested == trials && idempotent == trials &&
                    monotone == trials;
  return {pass, "contraction " + std::to_string(contraction) + ", Lipschitz " + std::to_string(lipschitz) +
                    ", nestedness " + std::to_string(nested) + ", idempotence " + std::to_string(idempotent) +
                    ", monotone residual " + std::to_string(monotone) + " of " + std::to_string(trials)};
}

Outcome golden_values() {
  const auto ramp = [](double x) { return x; };
  const CoordinateVector c = project_exact(ramp, BasisSystem::fourier(3));
  const Eigen::Vector3d expected(0.5, 0.0, -std::sqrt(2.0) / (2 * std::numbers::pi));
  const double coord_err = (c.coords - expected).cwiseAbs().maxCoeff();
  const BasisSystem b1 = BasisSystem::fourier(1);
  const double residual_err = std::abs(residual_norm(ramp, project_exact(ramp, b1), b1) - std::sqrt(1.0 / 12.0));
  return {coord_err <= 1e-9 && residual_err <= 1e-8,
          "coordinate error " + fmt("%.1e", coord_err) + ", residual error " + fmt("%.1e", residual_err)};
}

Outcome gradient_check() {
  RandomStream rng(3, StreamId::make(StreamPurpose::Fuzz, 102, 0));
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t p = 1 + static_cast<std::size_t>(t % 5);
    const std::size_t L = 1 + static_cast<std::size_t>(t % 4);
    FmlpModel m = FmlpModel::zeros(p, L, 3.0);
    for (Eigen::Index l = 0; l < m.a.size(); ++l) {
      m.a[l] = rng.uniform(-1, 1);
      m.beta0[l] = rng.uniform(-1, 1);
      for (Eigen::Index k = 0; k < m.beta.cols(); ++k) m.beta(l, k) = rng.uniform(-1.5, 1.5);
    }
    m.a = project_l1_ball(m.a, m.alpha);
    CoordDataset d;
    d.inputs.resize(10, static_cast<Eigen::Index>(p));
    d.targets.resize(10);
    for (Eigen::Index i = 0; i < 10; ++i) {
      for (Eigen::Index k = 0; k < d.inputs.cols(); ++k) d.inputs(i, k) = rng.normal();
      d.targets[i] = rng.normal();
    }
    const Gradient g = loss_and_gradient(m, d).gradient;
    auto probe = [&](double analytic, double& param) {
      const double h = 1e-3;
      const double saved = param;
      auto at = [&](double step) {
        param = saved + step;
        return empirical_mse(m, d);
      };
      const double numeric = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
      param = saved;
      worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    };
    for (Eigen::Index l = 0; l < m.a.size(); ++l) {
      probe(g.a[l], m.a[l]);
      probe(g.beta0[l], m.beta0[l]);
      for (Eigen::Index k = 0; k < m.beta.cols(); ++k) probe(g.beta(l, k), m.beta(l, k));
    }
  }
  return {worst < 1e-5, "worst relative error " + fmt("%.2e", worst) + " over 50 cases"};
}

Outcome l1_projection() {
  RandomStream rng(4, StreamId::make(StreamPurpose::Fuzz, 103, 0));
  int feasible = 0, optimal = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto dim = static_cast<Eigen::Index>(1 + t % 8);
    const double radius = rng.uniform(0.05, 3.0);
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = 2 * rng.normal();
    const Eigen::VectorXd u = project_l1_ball(v, radius);
    if (u.lpNorm<1>() <= radius + 1e-12) ++feasible;
    const double dist = (u - v).norm();
    bool best = true;
    for (int s = 0; s < 200 && best; ++s) {
      Eigen::VectorXd w(dim);
      for (Eigen::Index i = 0; i < dim; ++i) w[i] = rng.normal();
      w *= radius / w.lpNorm<1>();  // boundary point
      if (s % 2) w *= rng.uniform();
      best = (w - v).norm() >= dist - 1e-9;
    }
    if (best) ++optimal;
  }
  const Eigen::VectorXd a = project_l1_ball(Eigen::Vector2d(3, 0), 1.0);
  const Eigen::VectorXd b = project_l1_ball(Eigen::Vector2d(2, 1), 1.0);
  const bool goldens = (a - Eigen::Vector2d(1, 0)).norm() < 1e-12 && (b - Eigen::Vector2d(1, 0)).norm() < 1e-12;
  return {feasible == 1000 && optimal == 1000 && goldens,
          "feasible " + std::to_string(feasible) + "/1000, optimal " + std::to_string(optimal) + "/1000, goldens " +
              (goldens ? "ok" : "wrong")};
}

Outcome schedule_diagnostics() {
  const Schedule s = schedule(100);
  const double ratio = capacity_ratio(schedule(1000)) / capacity_ratio(schedule(1000000000));
  const bool pass = s.hidden_units == 5 && std::abs(s.alpha - 1.778279) <= 1e-6 && ratio >= 10.0;
  return {pass, "schedule(100) = (" + std::to_string(s.hidden_units) + ", " + fmt("%.6f", s.alpha) +
                    "), capacity ratio n=1e3 / n=1e9 = " + fmt("%.1f", ratio)};
}

Outcome planted_recovery() {
  const std::size_t p = 3, L = 3, n = 2000;
  RandomStream rng(5, StreamId::make(StreamPurpose::Fuzz, 104, 0));
  FmlpModel planted = FmlpModel::zeros(p, L, 2.0);
  for (Eigen::Index l = 0; l < planted.a.size(); ++l) {
    planted.a[l] = rng.uniform(-1, 1);
    planted.beta0[l] = rng.uniform(-1, 1);
    for (Eigen::Index k = 0; k < planted.beta.cols(); ++k) planted.beta(l, k) = rng.uniform(-2, 2);
  }
  planted.a = project_l1_ball(planted.a, planted.alpha);
  CoordDataset data;
  data.inputs.resize(n, p);
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    for (Eigen::Index k = 0; k < data.inputs.cols(); ++k) data.inputs(i, k) = rng.normal();
  }
  data.targets = forward_batch(planted, data.inputs);
  const TrainResult fit = train(data, L, planted.alpha, TrainConfig{});
  const double rmse = empirical_rmse(fit.model, data);
  return {rmse < 1e-3, "empirical RMSE " + fmt("%.2e", rmse) + " (p=3, L=3, n=2000, default budget)"};
}

Outcome approximation_trend() {
  const ExperimentConfig cfg = load_config(config_path("approx.json"));
  const ResultsTable t = run_approx_sweep(cfg);
  const auto sup = rows_with_metric(t, "sup_error");
  if (count_failures(t) > 0 || sup.size() != 3) return {false, "sweep produced failures or missing cells"};
  const bool decreasing = sup[0].value > sup[1].value && sup[1].value > sup[2].value;
  return {decreasing && sup[2].value < 0.1, "sup-error " + fmt("%.4f", sup[0].value) + " -> " +
                                                fmt("%.4f", sup[1].value) + " -> " + fmt("%.4f", sup[2].value)};
}

Outcome consistency_trend() {
  const ExperimentConfig cfg = load_config(config_path("consistency.json"));
  const ResultsTable t = run_consistency_sweep(cfg);
  if (count_failures(t) > 0) return {false, std::to_string(count_failures(t)) + " failed cells"};
  const auto gaps = rows_with_metric(t, "gap");
  const std::size_t nn = cfg.n_values.size();
  int good = 0;
  std::string detail;
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    bool ok = gaps[r * nn + nn - 1].value < 0.5 * gaps[r * nn].value;
    for (std::size_t j = 1; j < nn; ++j) {
      ok = ok && gaps[r * nn + j].value <= gaps[r * nn + j - 1].value + 2 * gaps[r * nn + j].se;
    }
    if (ok) ++good;
    detail += (r ? "; " : "") + std::string("seed ") + std::to_string(r) + ": " +
              fmt("%.4f", gaps[r * nn].value) + " -> " + fmt("%.4f", gaps[r * nn + nn - 1].value) +
              (ok ? "" : " (fails)");
  }
  return {good >= 4, std::to_string(good) + "/" + std::to_string(cfg.replicates) + " seeds; " + detail};
}

Outcome optimal_risk_identity() {
  bool pass = true;
  std::string detail;
  for (const FunctionalDistribution& dist : shipped_distributions()) {
    const RiskEstimate r = estimate_risk(conditional_expectation(dist), dist, 100000);
    const bool ok = std::abs(r.rmse - dist.noise_sd) <= 3 * r.se;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + std::string(to_string(dist.target.kind)) + " " + fmt("%.4f", r.rmse) +
              " vs " + fmt("%.2f", dist.noise_sd);
  }
  return {pass, detail};
}

Outcome reproducibility() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"schedule.json", "approx.json", "consistency-null.json"}) {
    ExperimentConfig cfg = load_config(config_path(name));
    const std::string first = csv(run_experiment(cfg));
    cfg.workers = 2;
    const bool same = csv(run_experiment(cfg)) == first;
    pass = pass && same;
    detail += (detail.empty() ? "" : ", ") + std::string(name) + (same ? " identical" : " DIFFERS");
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "orthonormality", 5, orthonormality},
      {2, "projection properties", 30, projection_properties},
      {3, "analytic golden values", 0, golden_values},
      {4, "gradient check", 10, gradient_check},
      {5, "L1-ball projection", 0, l1_projection},
      {6, "schedule diagnostics", 0, schedule_diagnostics},
      {7, "planted-model recovery", 120, planted_recovery},
      {8, "universal-approximation trend", 600, approximation_trend},
      {9, "consistency trend", 1800, consistency_trend},
      {10, "optimal-risk identity", 0, optimal_risk_identity},
      {11, "reproducibility", 0, reproducibility},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && seconds > c.budget_s) {
      outcome.pass = false;
      outcome.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    if (!outcome.pass) ++failures;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name, outcome.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
