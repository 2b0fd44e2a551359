#include "fmlp/projection.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "fmlp/error.hpp"
#include "format.hpp"

namespace fmlp {
namespace {

// Below this reciprocal condition number the unpenalized fit is refused.
constexpr double kRcondFloor = 1e-12;

Eigen::VectorXd sample_on_rule(const EvaluableFunction& g, const QuadratureRule& rule) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(rule.size()));
  for (std::size_t m = 0; m < rule.size(); ++m) {
    const double v = g(rule.nodes[m]);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::Evaluation, "function is not finite at x = " + format_double(rule.nodes[m]));
    }
    values[static_cast<Eigen::Index>(m)] = v;
  }
  return values;
}

const Eigen::MatrixXd& table_for(const BasisSystem& basis, const QuadratureRule& rule,
                                 Eigen::MatrixXd& scratch) {
  if (&rule == &reference_quadrature()) return basis.reference_table();
  scratch = basis.design_matrix(rule.nodes);
  return scratch;
}

}  // namespace

void SampledFunction::validate() const {
  if (xs.size() != values.size()) {
    throw Error(ErrorCode::Shape, "curve '" + id + "' has " + std::to_string(xs.size()) + " abscissae but " +
                                      std::to_string(values.size()) + " values");
  }
  if (xs.empty()) throw Error(ErrorCode::EmptyData, "curve '" + id + "' has no samples");
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (!(xs[j] >= 0.0 && xs[j] <= 1.0)) {
      throw Error(ErrorCode::Domain, "curve '" + id + "' has abscissa " + format_double(xs[j]) + " outside [0, 1]");
    }
    if (j > 0 && !(xs[j] > xs[j - 1])) {
      throw Error(ErrorCode::Ordering, "curve '" + id + "' abscissae are not strictly increasing");
    }
    if (!std::isfinite(values[j])) {
      throw Error(ErrorCode::Evaluation, "curve '" + id + "' has a non-finite value");
    }
  }
}

CoordinateVector project_exact(const EvaluableFunction& g, const BasisSystem& basis, const QuadratureRule& rule) {
  const Eigen::VectorXd values = sample_on_rule(g, rule);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.size()));
  Eigen::MatrixXd scratch;
  const Eigen::MatrixXd& table = table_for(basis, rule, scratch);
  return {table.transpose() * w.cwiseProduct(values), basis.id()};
}

Eigen::VectorXd least_squares_coords(const Eigen::MatrixXd& design, const Eigen::VectorXd& values, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw Error(ErrorCode::InvalidArgument, "ridge must be a finite nonnegative number");
  }
  const Eigen::Index m = design.rows();
  const Eigen::Index p = design.cols();
  if (m < p) {
    throw Error(ErrorCode::Underdetermined, std::to_string(m) + " samples cannot determine " + std::to_string(p) +
                                                " coordinates");
  }
  if (values.size() != m) throw Error(ErrorCode::Shape, "sample count does not match design rows");

  // Ridge enters as sqrt(ridge) * I rows appended to the design, so the SVD
  // solves the penalized problem without forming normal equations.
  Eigen::MatrixXd augmented = design;
  Eigen::VectorXd rhs = values;
  if (ridge > 0.0) {
    augmented.conservativeResize(m + p, p);
    augmented.bottomRows(p) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(p, p);
    rhs.conservativeResize(m + p);
    rhs.tail(p).setZero();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(augmented, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double rcond = sv.size() == 0 || sv[0] == 0.0 ? 0.0 : sv[sv.size() - 1] / sv[0];
  if (rcond < kRcondFloor) {
    throw Error(ErrorCode::Conditioning,
                "least squares design is rank deficient (reciprocal condition " + format_double(rcond) +
                    "); set ridge > 0");
  }
  return svd.solve(rhs);
}

CoordinateVector project_sampled(const SampledFunction& f, const BasisSystem& basis, double ridge) {
  f.validate();
  if (f.size() < basis.dim()) {
    throw Error(ErrorCode::Underdetermined, "curve '" + f.id + "' has " + std::to_string(f.size()) +
                                                " samples for a basis of dimension " + std::to_string(basis.dim()));
  }
  const Eigen::MatrixXd design = basis.design_matrix(f.xs);
  const Eigen::Map<const Eigen::VectorXd> values(f.values.data(), static_cast<Eigen::Index>(f.size()));
  return {least_squares_coords(design, values, ridge), basis.id()};
}

double reconstruct(const CoordinateVector& c, const BasisSystem& basis, double x) {
  if (c.size() != basis.dim()) throw Error(ErrorCode::Shape, "coordinate vector does not match basis dimension");
  Eigen::VectorXd phi(static_cast<Eigen::Index>(basis.dim()));
  basis.eval_all(x, {phi.data(), basis.dim()});
  return phi.dot(c.coords);
}

EvaluableFunction reconstruction(const CoordinateVector& c, const BasisSystem& basis) {
  if (c.size() != basis.dim()) throw Error(ErrorCode::Shape, "coordinate vector does not match basis dimension");
  return [c, basis](double x) { return reconstruct(c, basis, x); };
}

double residual_norm(const EvaluableFunction& g, const CoordinateVector& c, const BasisSystem& basis,
                     const QuadratureRule& rule) {
  if (c.size() != basis.dim()) throw Error(ErrorCode::Shape, "coordinate vector does not match basis dimension");
  const Eigen::VectorXd values = sample_on_rule(g, rule);
  Eigen::MatrixXd scratch;
  const Eigen::MatrixXd& table = table_for(basis, rule, scratch);
  const Eigen::VectorXd diff = values - table * c.coords;
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.size()));
  return std::sqrt(std::max(0.0, w.dot(diff.cwiseAbs2())));
}

double l2_norm(const EvaluableFunction& g, const QuadratureRule& rule) {
  const Eigen::VectorXd values = sample_on_rule(g, rule);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.size()));
  return std::sqrt(w.dot(values.cwiseAbs2()));
}

Eigen::MatrixXd change_of_basis(const BasisSystem& source, const BasisSystem& target, const QuadratureRule& rule) {
  Eigen::MatrixXd source_scratch;
  Eigen::MatrixXd target_scratch;
  const Eigen::MatrixXd& s = table_for(source, rule, source_scratch);
  const Eigen::MatrixXd& t = table_for(target, rule, target_scratch);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.size()));
  return t.transpose() * w.asDiagonal() * s;
}

}  // namespace fmlp
