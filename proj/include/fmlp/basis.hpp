#pragma once

// Orthonormal function systems on [0, 1] and the quadrature used for every
// inner product. The reference measure is Lebesgue measure on [0, 1].

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fmlp {

/// Reference measure. Only Lebesgue measure on the unit interval (total
/// mass 1) exists today.
enum class Measure { LebesgueUnitInterval };

/// Composite Gauss-Legendre rule on [0, 1]. Weights sum to the mass of the
/// measure.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// Polynomials up to this degree are integrated exactly on each panel.
  int exactness_degree = 0;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }

  template <class F>
  [[nodiscard]] double integrate(F&& f) const {
    double total = 0.0;
    for (std::size_t m = 0; m < nodes.size(); ++m) total += weights[m] * f(nodes[m]);
    return total;
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

/// n_panels equal panels, nodes_per_panel Gauss-Legendre nodes each.
QuadratureRule make_quadrature(std::size_t n_panels, std::size_t nodes_per_panel);

/// 64 panels x 8 nodes, used wherever an integral over [0, 1] is needed.
const QuadratureRule& reference_quadrature();

enum class BasisFamily { Fourier, BSpline };

/// An orthonormal system (phi_0, ..., phi_{p-1}) spanning V_p.
///
/// Fourier ordering: 1, sqrt2 cos(2 pi x), sqrt2 sin(2 pi x), sqrt2 cos(4 pi x), ...
/// Fourier systems are nested across p.
///
/// B-spline systems use a clamped knot vector on [0, 1]. The raw B-splines
/// are orthonormalized with the inverse Cholesky factor of their Gram matrix
/// under the reference rule, which keeps the spanned space unchanged.
///
/// Immutable after construction; safe to share between threads.
class BasisSystem {
 public:
  static BasisSystem fourier(std::size_t p);
  static BasisSystem bspline(int degree, std::vector<double> interior_knots);

  [[nodiscard]] BasisFamily family() const noexcept { return family_; }
  [[nodiscard]] std::size_t dim() const noexcept { return p_; }
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] const std::vector<double>& interior_knots() const noexcept { return interior_; }
  /// Full clamped knot vector (empty for Fourier).
  [[nodiscard]] const std::vector<double>& knot_vector() const noexcept { return knots_; }
  /// Row i holds the coefficients of phi_i on the raw family. Identity for Fourier.
  [[nodiscard]] const Eigen::MatrixXd& transform() const noexcept { return transform_; }

  /// Stable textual identity, e.g. "fourier:5" or "bspline:3:0.25,0.5".
  [[nodiscard]] std::string id() const;

  /// phi_k(x) for 0-based k. Throws Domain for k >= p or x outside [0, 1].
  [[nodiscard]] double eval(std::size_t k, double x) const;

  /// All p values at x. out.size() must equal dim().
  void eval_all(double x, std::span<double> out) const;

  /// Raw (untransformed) family at x. For Fourier this equals eval_all.
  void eval_raw(double x, std::span<double> out) const;

  /// Row j = (phi_0(xs_j), ..., phi_{p-1}(xs_j)).
  [[nodiscard]] Eigen::MatrixXd design_matrix(std::span<const double> xs) const;

  /// Basis values at the reference quadrature nodes (precomputed).
  [[nodiscard]] const Eigen::MatrixXd& reference_table() const noexcept { return reference_table_; }

 private:
  BasisSystem() = default;
  void eval_all_unchecked(double x, std::span<double> out) const;
  void eval_raw_unchecked(double x, std::span<double> out) const;
  void tabulate_reference();

  BasisFamily family_ = BasisFamily::Fourier;
  std::size_t p_ = 0;
  int degree_ = 0;
  std::vector<double> interior_;
  std::vector<double> knots_;
  Eigen::MatrixXd transform_;
  Eigen::MatrixXd reference_table_;
};

/// Entry (i, j) = sum_m w_m phi_i(x_m) phi_j(x_m).
Eigen::MatrixXd gram_matrix(const BasisSystem& basis, const QuadratureRule& rule);

/// Gram matrix of the raw family (before orthonormalization).
Eigen::MatrixXd raw_gram_matrix(const BasisSystem& basis, const QuadratureRule& rule);

}  // namespace fmlp
