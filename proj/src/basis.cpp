#include "fmlp/basis.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fmlp/error.hpp"
#include "format.hpp"

namespace fmlp {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Smallest acceptable reciprocal condition of the raw spline Gram matrix.
constexpr double kGramRcondFloor = 1e-14;

void check_unit_interval(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::Domain, "evaluation point " + format_double(x) + " is outside [0, 1]");
  }
}

}  // namespace

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration on P_n from the Chebyshev-like initial guess; roots are
  // symmetric so only half are computed.
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / static_cast<double>(j);
      }
      derivative = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / derivative;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * derivative * derivative);
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

QuadratureRule make_quadrature(std::size_t n_panels, std::size_t nodes_per_panel) {
  if (n_panels == 0 || nodes_per_panel == 0) {
    throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one panel and one node");
  }
  std::vector<double> gl_nodes;
  std::vector<double> gl_weights;
  gauss_legendre(nodes_per_panel, gl_nodes, gl_weights);

  QuadratureRule rule;
  rule.exactness_degree = static_cast<int>(2 * nodes_per_panel - 1);
  rule.nodes.reserve(n_panels * nodes_per_panel);
  rule.weights.reserve(n_panels * nodes_per_panel);
  const double width = 1.0 / static_cast<double>(n_panels);
  for (std::size_t panel = 0; panel < n_panels; ++panel) {
    const double mid = (static_cast<double>(panel) + 0.5) * width;
    for (std::size_t j = 0; j < nodes_per_panel; ++j) {
      rule.nodes.push_back(mid + 0.5 * width * gl_nodes[j]);
      rule.weights.push_back(0.5 * width * gl_weights[j]);
    }
  }
  return rule;
}

const QuadratureRule& reference_quadrature() {
  static const QuadratureRule rule = make_quadrature(64, 8);
  return rule;
}

BasisSystem BasisSystem::fourier(std::size_t p) {
  if (p == 0) throw Error(ErrorCode::InvalidDimension, "basis dimension must be at least 1");
  BasisSystem basis;
  basis.family_ = BasisFamily::Fourier;
  basis.p_ = p;
  basis.transform_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  basis.tabulate_reference();
  return basis;
}

BasisSystem BasisSystem::bspline(int degree, std::vector<double> interior_knots) {
  if (degree < 1) throw Error(ErrorCode::InvalidArgument, "spline degree must be at least 1");
  for (std::size_t i = 0; i < interior_knots.size(); ++i) {
    const double t = interior_knots[i];
    if (!(t > 0.0 && t < 1.0)) {
      throw Error(ErrorCode::InvalidKnots, "interior knot " + format_double(t) + " is not inside (0, 1)");
    }
    if (i > 0 && t < interior_knots[i - 1]) {
      throw Error(ErrorCode::InvalidKnots, "interior knots must be nondecreasing");
    }
  }
  // A knot repeated more than degree + 1 times produces an identically zero
  // B-spline.
  for (std::size_t i = 0; i < interior_knots.size();) {
    std::size_t j = i;
    while (j < interior_knots.size() && interior_knots[j] == interior_knots[i]) ++j;
    if (j - i > static_cast<std::size_t>(degree) + 1) {
      throw Error(ErrorCode::InvalidKnots, "knot " + format_double(interior_knots[i]) +
                                               " has multiplicity above degree + 1");
    }
    i = j;
  }

  BasisSystem basis;
  basis.family_ = BasisFamily::BSpline;
  basis.degree_ = degree;
  basis.interior_ = std::move(interior_knots);
  basis.p_ = static_cast<std::size_t>(degree) + 1 + basis.interior_.size();
  basis.knots_.assign(static_cast<std::size_t>(degree) + 1, 0.0);
  basis.knots_.insert(basis.knots_.end(), basis.interior_.begin(), basis.interior_.end());
  basis.knots_.insert(basis.knots_.end(), static_cast<std::size_t>(degree) + 1, 1.0);

  const auto p = static_cast<Eigen::Index>(basis.p_);
  basis.transform_ = Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd gram = raw_gram_matrix(basis, reference_quadrature());
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < kGramRcondFloor) {
    throw Error(ErrorCode::Conditioning, "spline Gram matrix is numerically singular");
  }
  const Eigen::MatrixXd lower = llt.matrixL();
  basis.transform_ = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
  basis.tabulate_reference();
  return basis;
}

std::string BasisSystem::id() const {
  std::ostringstream out;
  if (family_ == BasisFamily::Fourier) {
    out << "fourier:" << p_;
  } else {
    out << "bspline:" << degree_ << ':';
    for (std::size_t i = 0; i < interior_.size(); ++i) {
      if (i) out << ',';
      out << format_double(interior_[i]);
    }
  }
  return out.str();
}

double BasisSystem::eval(std::size_t k, double x) const {
  if (k >= p_) {
    throw Error(ErrorCode::Domain, "basis index " + std::to_string(k) + " out of range for dimension " +
                                       std::to_string(p_));
  }
  check_unit_interval(x);
  if (family_ == BasisFamily::Fourier) {
    if (k == 0) return 1.0;
    const double freq = kTwoPi * static_cast<double>((k + 1) / 2);
    return (k % 2 == 1) ? kSqrt2 * std::cos(freq * x) : kSqrt2 * std::sin(freq * x);
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(p_));
  eval_all_unchecked(x, {values.data(), p_});
  return values[static_cast<Eigen::Index>(k)];
}

void BasisSystem::eval_all(double x, std::span<double> out) const {
  if (out.size() != p_) throw Error(ErrorCode::Shape, "output span does not match basis dimension");
  check_unit_interval(x);
  eval_all_unchecked(x, out);
}

void BasisSystem::eval_raw(double x, std::span<double> out) const {
  if (out.size() != p_) throw Error(ErrorCode::Shape, "output span does not match basis dimension");
  check_unit_interval(x);
  eval_raw_unchecked(x, out);
}

void BasisSystem::eval_raw_unchecked(double x, std::span<double> out) const {
  if (family_ == BasisFamily::Fourier) {
    out[0] = 1.0;
    for (std::size_t k = 1; k < p_; ++k) {
      const double freq = kTwoPi * static_cast<double>((k + 1) / 2);
      out[k] = (k % 2 == 1) ? kSqrt2 * std::cos(freq * x) : kSqrt2 * std::sin(freq * x);
    }
    return;
  }

  // Cox-de Boor: the degree + 1 nonzero B-splines on the knot span holding x.
  std::fill(out.begin(), out.end(), 0.0);
  const auto d = static_cast<std::size_t>(degree_);
  std::size_t span = p_ - 1;  // x == 1 belongs to the last span
  if (x < 1.0) {
    const auto it = std::upper_bound(knots_.begin() + static_cast<std::ptrdiff_t>(d),
                                     knots_.begin() + static_cast<std::ptrdiff_t>(p_ + 1), x);
    span = static_cast<std::size_t>(it - knots_.begin()) - 1;
  }
  std::vector<double> local(d + 1, 0.0);
  std::vector<double> left(d + 1, 0.0);
  std::vector<double> right(d + 1, 0.0);
  local[0] = 1.0;
  for (std::size_t j = 1; j <= d; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom > 0.0 ? local[r] / denom : 0.0;
      local[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    local[j] = saved;
  }
  for (std::size_t r = 0; r <= d; ++r) out[span - d + r] = local[r];
}

void BasisSystem::eval_all_unchecked(double x, std::span<double> out) const {
  if (family_ == BasisFamily::Fourier) {
    eval_raw_unchecked(x, out);
    return;
  }
  Eigen::VectorXd raw(static_cast<Eigen::Index>(p_));
  eval_raw_unchecked(x, {raw.data(), p_});
  Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(p_)) = transform_ * raw;
}

Eigen::MatrixXd BasisSystem::design_matrix(std::span<const double> xs) const {
  Eigen::MatrixXd design(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(p_));
  Eigen::VectorXd row(static_cast<Eigen::Index>(p_));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    eval_all(xs[j], {row.data(), p_});
    design.row(static_cast<Eigen::Index>(j)) = row.transpose();
  }
  return design;
}

void BasisSystem::tabulate_reference() {
  reference_table_ = design_matrix(reference_quadrature().nodes);
}

namespace {

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& table, const QuadratureRule& rule) {
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.size()));
  Eigen::MatrixXd gram = table.transpose() * w.asDiagonal() * table;
  // Exact symmetry regardless of summation order.
  return 0.5 * (gram + gram.transpose());
}

}  // namespace

Eigen::MatrixXd gram_matrix(const BasisSystem& basis, const QuadratureRule& rule) {
  return weighted_gram(basis.design_matrix(rule.nodes), rule);
}

Eigen::MatrixXd raw_gram_matrix(const BasisSystem& basis, const QuadratureRule& rule) {
  const auto p = basis.dim();
  Eigen::MatrixXd table(static_cast<Eigen::Index>(rule.size()), static_cast<Eigen::Index>(p));
  Eigen::VectorXd row(static_cast<Eigen::Index>(p));
  for (std::size_t m = 0; m < rule.size(); ++m) {
    basis.eval_raw(rule.nodes[m], {row.data(), p});
    table.row(static_cast<Eigen::Index>(m)) = row.transpose();
  }
  return weighted_gram(table, rule);
}

}  // namespace fmlp
