#pragma once

// The coordinate map: functions in L2[0, 1] to coordinate vectors on an
// orthonormal system, plus reconstruction and residual diagnostics.

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "fmlp/basis.hpp"

namespace fmlp {

/// Coordinates of a projected function on a named basis.
struct CoordinateVector {
  Eigen::VectorXd coords;
  std::string basis_ref;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(coords.size()); }
  /// Euclidean norm, equal to the L2 norm of the projection by Parseval.
  [[nodiscard]] double norm() const { return coords.norm(); }
};

/// An irregularly observed curve: strictly increasing abscissae in [0, 1].
struct SampledFunction {
  std::string id;
  std::vector<double> xs;
  std::vector<double> values;

  /// Throws Shape/Ordering/Domain when the invariants do not hold.
  void validate() const;
  [[nodiscard]] std::size_t size() const noexcept { return xs.size(); }
};

/// A function known in closed form on [0, 1].
using EvaluableFunction = std::function<double(double)>;

/// coords_k = <g, phi_k> under `rule`. Throws Evaluation if g is not finite
/// at some node.
CoordinateVector project_exact(const EvaluableFunction& g, const BasisSystem& basis,
                               const QuadratureRule& rule = reference_quadrature());

/// Penalized least squares fit of the samples on the basis:
///   argmin_c sum_j (v_j - sum_k c_k phi_k(x_j))^2 + ridge |c|^2.
/// Throws Underdetermined when fewer samples than basis functions, and
/// Conditioning when the design is rank deficient and ridge == 0.
CoordinateVector project_sampled(const SampledFunction& f, const BasisSystem& basis, double ridge = 0.0);

/// Design-matrix variant used for batches sharing one grid.
Eigen::VectorXd least_squares_coords(const Eigen::MatrixXd& design, const Eigen::VectorXd& values, double ridge);

/// sum_k coords_k phi_k(x).
double reconstruct(const CoordinateVector& c, const BasisSystem& basis, double x);

/// Evaluation handle for the reconstruction (copies the basis and coords).
EvaluableFunction reconstruction(const CoordinateVector& c, const BasisSystem& basis);

/// Quadrature value of ||g - reconstruct(c)||_2.
double residual_norm(const EvaluableFunction& g, const CoordinateVector& c, const BasisSystem& basis,
                     const QuadratureRule& rule = reference_quadrature());

/// Quadrature value of ||g||_2.
double l2_norm(const EvaluableFunction& g, const QuadratureRule& rule = reference_quadrature());

/// Matrix M with M(j, k) = <phi_k of `source`, phi_j of `target`>, so the
/// coordinates of a function expanded on `source` map to `target` by
/// multiplication with M.
Eigen::MatrixXd change_of_basis(const BasisSystem& source, const BasisSystem& target,
                                const QuadratureRule& rule = reference_quadrature());

}  // namespace fmlp
