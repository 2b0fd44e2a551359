#pragma once

// Single hidden layer perceptron on projected coordinates,
//
//   h(x) = sum_l a_l T(beta0_l + sum_k beta_lk x_k),   sum_l |a_l| <= alpha,
//
// with T the logistic sigmoid, trained by empirical risk minimization under
// the L1 budget on the output weights.

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fmlp {

enum class Activation { LogisticSigmoid };

/// Logistic sigmoid; values in [0, 1], nondecreasing.
double sigmoid(double z) noexcept;

struct FmlpModel {
  Eigen::VectorXd a;      ///< output weights, length L
  Eigen::VectorXd beta0;  ///< hidden biases, length L
  Eigen::MatrixXd beta;   ///< hidden weights, L x p
  double alpha = 1.0;     ///< budget on sum |a_l|
  Activation activation = Activation::LogisticSigmoid;

  /// All-zero parameters.
  static FmlpModel zeros(std::size_t p, std::size_t hidden, double alpha);

  [[nodiscard]] std::size_t hidden_units() const noexcept { return static_cast<std::size_t>(a.size()); }
  [[nodiscard]] std::size_t input_dim() const noexcept { return static_cast<std::size_t>(beta.cols()); }
  [[nodiscard]] std::size_t parameter_count() const noexcept { return hidden_units() * (input_dim() + 2); }

  /// Shape, finiteness and budget checks (budget slack 1e-9).
  void validate() const;
};

/// Training pairs after projection: row i of `inputs` is pi_p(G^i).
struct CoordDataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
  std::vector<std::string> ids;  ///< optional row identifiers
  std::string basis_ref;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(targets.size()); }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  void validate() const;
};

double forward(const FmlpModel& model, std::span<const double> x);
Eigen::VectorXd forward_batch(const FmlpModel& model, const Eigen::MatrixXd& inputs);

/// Same layout as the model parameters.
struct Gradient {
  Eigen::VectorXd a;
  Eigen::VectorXd beta0;
  Eigen::MatrixXd beta;
};

struct LossAndGradient {
  double loss = 0.0;  ///< (1/n) sum (h(x_i) - y_i)^2
  Gradient gradient;
};

LossAndGradient loss_and_gradient(const FmlpModel& model, const CoordDataset& data);
double empirical_mse(const FmlpModel& model, const CoordDataset& data);
double empirical_rmse(const FmlpModel& model, const CoordDataset& data);

/// Euclidean projection onto {u : sum |u_i| <= radius} (sort-based
/// soft thresholding).
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

/// L_n = max(1, ceil(ln n)), alpha_n = n^(1/8).
struct Schedule {
  std::uint64_t n = 1;
  std::size_t hidden_units = 1;
  double alpha = 1.0;
};

Schedule schedule(std::uint64_t n);

/// L_n alpha_n^4 log(L_n alpha_n) / n; must vanish as n grows.
double capacity_ratio(const Schedule& s);
/// alpha_n^4 / n^(1 - delta); must vanish as n grows for some delta > 0.
double budget_ratio(const Schedule& s, double delta = 0.25);

enum class TrainMethod {
  /// Damped Gauss-Newton step, projection of a onto the L1 ball, damping
  /// raised until the loss does not increase.
  LevenbergMarquardt,
  /// Gradient step, projection of a onto the L1 ball, step halved whenever
  /// the loss would increase.
  GradientDescent,
};

const char* to_string(TrainMethod method) noexcept;

struct TrainConfig {
  TrainMethod method = TrainMethod::LevenbergMarquardt;
  unsigned restarts = 20;
  unsigned max_iters = 2000;
  double step = 1.0;         ///< GradientDescent: initial step size
  double damping = 1e-3;     ///< LevenbergMarquardt: initial damping
  std::uint64_t seed = 0;
  double tolerance = 1e-10;  ///< minimal loss improvement over `patience` iterations
  unsigned patience = 50;
  unsigned workers = 1;      ///< restarts run on up to this many threads

  void validate() const;
};

struct RestartTrace {
  /// Best loss so far after each accepted or rejected iteration
  /// (index 0 = initial loss). Non-increasing.
  std::vector<double> best_loss;
  double final_loss = 0.0;
  unsigned iterations = 0;
  bool converged = false;
};

struct TrainReport {
  std::vector<RestartTrace> restarts;
  std::size_t best_restart = 0;
  double final_loss = 0.0;  ///< empirical MSE of the returned model
};

struct TrainResult {
  FmlpModel model;
  TrainReport report;
};

/// Random initial point for restart `restart` (deterministic in seed and
/// restart index).
FmlpModel initial_model(std::size_t p, std::size_t hidden, double alpha, std::uint64_t seed, unsigned restart);

/// Multi-restart projected descent; returns the restart with the lowest
/// final empirical MSE (ties go to the lowest index). Throws Divergence if a
/// loss becomes non-finite.
TrainResult train(const CoordDataset& data, std::size_t hidden, double alpha, const TrainConfig& cfg);

/// One restart from a given starting model; exposed for tests.
RestartTrace optimize(FmlpModel& model, const CoordDataset& data, const TrainConfig& cfg, unsigned restart_index);

}  // namespace fmlp
