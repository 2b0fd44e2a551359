#include "fmlp/network.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fmlp/error.hpp"
#include "fmlp/rng.hpp"
#include "parallel.hpp"

namespace fmlp {

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

FmlpModel FmlpModel::zeros(std::size_t p, std::size_t hidden, double alpha) {
  if (p == 0 || hidden == 0) throw Error(ErrorCode::InvalidDimension, "model needs p >= 1 and L >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  FmlpModel model;
  const auto L = static_cast<Eigen::Index>(hidden);
  model.a = Eigen::VectorXd::Zero(L);
  model.beta0 = Eigen::VectorXd::Zero(L);
  model.beta = Eigen::MatrixXd::Zero(L, static_cast<Eigen::Index>(p));
  model.alpha = alpha;
  return model;
}

void FmlpModel::validate() const {
  if (a.size() == 0 || beta.cols() == 0) throw Error(ErrorCode::InvalidDimension, "model needs p >= 1 and L >= 1");
  if (beta0.size() != a.size() || beta.rows() != a.size()) {
    throw Error(ErrorCode::Shape, "model parameter shapes disagree");
  }
  if (!a.allFinite() || !beta0.allFinite() || !beta.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "model parameters must be finite");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  if (a.lpNorm<1>() > alpha + 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "output weights exceed the L1 budget alpha");
  }
}

void CoordDataset::validate() const {
  if (targets.size() == 0) throw Error(ErrorCode::EmptyData, "dataset is empty");
  if (inputs.rows() != targets.size()) throw Error(ErrorCode::Shape, "input rows do not match target count");
  if (!ids.empty() && ids.size() != size()) throw Error(ErrorCode::Shape, "id count does not match target count");
  if (!inputs.allFinite() || !targets.allFinite()) throw Error(ErrorCode::InvalidArgument, "dataset has non-finite entries");
}

namespace {

Eigen::MatrixXd hidden_activations(const FmlpModel& model, const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd z = inputs * model.beta.transpose();
  z.rowwise() += model.beta0.transpose();
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

void check_inputs(const FmlpModel& model, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != model.input_dim()) {
    throw Error(ErrorCode::Shape, "input has dimension " + std::to_string(cols) + ", model expects " +
                                      std::to_string(model.input_dim()));
  }
}

}  // namespace

double forward(const FmlpModel& model, std::span<const double> x) {
  check_inputs(model, static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  double out = 0.0;
  for (Eigen::Index l = 0; l < model.a.size(); ++l) {
    out += model.a[l] * sigmoid(model.beta0[l] + model.beta.row(l).dot(xv));
  }
  return out;
}

Eigen::VectorXd forward_batch(const FmlpModel& model, const Eigen::MatrixXd& inputs) {
  check_inputs(model, inputs.cols());
  return hidden_activations(model, inputs) * model.a;
}

LossAndGradient loss_and_gradient(const FmlpModel& model, const CoordDataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyData, "dataset is empty");
  if (data.inputs.rows() != data.targets.size()) throw Error(ErrorCode::Shape, "input rows do not match target count");
  check_inputs(model, data.inputs.cols());

  const double scale = 2.0 / static_cast<double>(data.size());
  const Eigen::MatrixXd s = hidden_activations(model, data.inputs);
  const Eigen::VectorXd residual = s * model.a - data.targets;

  // d h / d z_l = a_l T'(z_l), with T' = T (1 - T).
  Eigen::MatrixXd delta = s.array() * (1.0 - s.array());
  delta.array().rowwise() *= model.a.transpose().array();
  delta.array().colwise() *= residual.array();

  LossAndGradient out;
  out.loss = residual.squaredNorm() / static_cast<double>(data.size());
  out.gradient.a = scale * (s.transpose() * residual);
  out.gradient.beta0 = scale * delta.colwise().sum().transpose();
  out.gradient.beta = scale * (delta.transpose() * data.inputs);
  return out;
}

double empirical_mse(const FmlpModel& model, const CoordDataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyData, "dataset is empty");
  if (data.inputs.rows() != data.targets.size()) throw Error(ErrorCode::Shape, "input rows do not match target count");
  return (forward_batch(model, data.inputs) - data.targets).squaredNorm() / static_cast<double>(data.size());
}

double empirical_rmse(const FmlpModel& model, const CoordDataset& data) {
  return std::sqrt(empirical_mse(model, data));
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "L1 radius must be positive");
  if (v.lpNorm<1>() <= radius) return v;

  std::vector<double> sorted(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) sorted[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double shrunk = std::max(std::abs(v[i]) - theta, 0.0);
    out[i] = std::copysign(shrunk, v[i]);
  }
  // Rounding in theta can leave the result a hair outside the ball.
  const double norm = out.lpNorm<1>();
  if (norm > radius) out *= radius / norm;
  return out;
}

Schedule schedule(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "schedule needs n >= 1");
  const double nd = static_cast<double>(n);
  const double units = std::ceil(std::log(nd));
  return {n, static_cast<std::size_t>(std::max(1.0, units)), std::pow(nd, 0.125)};
}

double capacity_ratio(const Schedule& s) {
  const double L = static_cast<double>(s.hidden_units);
  return L * std::pow(s.alpha, 4) * std::log(L * s.alpha) / static_cast<double>(s.n);
}

double budget_ratio(const Schedule& s, double delta) {
  return std::pow(s.alpha, 4) / std::pow(static_cast<double>(s.n), 1.0 - delta);
}

FmlpModel initial_model(std::size_t p, std::size_t hidden, double alpha, std::uint64_t seed, unsigned restart) {
  FmlpModel model = FmlpModel::zeros(p, hidden, alpha);
  RandomStream rng(seed, StreamId::make(StreamPurpose::WeightInit, restart, 0));
  const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(p));
  for (Eigen::Index l = 0; l < model.beta.rows(); ++l) {
    model.beta0[l] = hidden_scale * rng.uniform(-1.0, 1.0);
    for (Eigen::Index k = 0; k < model.beta.cols(); ++k) model.beta(l, k) = hidden_scale * rng.uniform(-1.0, 1.0);
  }
  for (Eigen::Index l = 0; l < model.a.size(); ++l) model.a[l] = rng.uniform(-alpha, alpha);
  model.a = project_l1_ball(model.a, alpha);
  return model;
}

const char* to_string(TrainMethod method) noexcept {
  switch (method) {
    case TrainMethod::LevenbergMarquardt: return "lm";
    case TrainMethod::GradientDescent: return "gd";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (restarts == 0) throw Error(ErrorCode::InvalidArgument, "at least one restart is required");
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  if (!(damping > 0.0) || !std::isfinite(damping)) throw Error(ErrorCode::InvalidArgument, "damping must be positive");
  if (!(tolerance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be nonnegative");
  if (patience == 0) throw Error(ErrorCode::InvalidArgument, "patience must be positive");
}

namespace {

constexpr int kMaxDampingIncreases = 40;
constexpr double kDampingUp = 4.0;
constexpr double kDampingDown = 3.0;
constexpr double kDampingFloor = 1e-12;

[[noreturn]] void diverged(unsigned restart, unsigned iteration) {
  throw Error(ErrorCode::Divergence, "non-finite loss in restart " + std::to_string(restart) + " at iteration " +
                                         std::to_string(iteration));
}

// Flat parameter layout: [a (L), beta0 (L), beta row-major (L x p)].
Eigen::VectorXd pack(const FmlpModel& m) {
  const Eigen::Index L = m.a.size();
  const Eigen::Index p = m.beta.cols();
  Eigen::VectorXd theta(L * (p + 2));
  theta.head(L) = m.a;
  theta.segment(L, L) = m.beta0;
  for (Eigen::Index l = 0; l < L; ++l) theta.segment(2 * L + l * p, p) = m.beta.row(l).transpose();
  return theta;
}

void unpack(FmlpModel& m, const Eigen::VectorXd& theta) {
  const Eigen::Index L = m.a.size();
  const Eigen::Index p = m.beta.cols();
  m.a = theta.head(L);
  m.beta0 = theta.segment(L, L);
  for (Eigen::Index l = 0; l < L; ++l) m.beta.row(l) = theta.segment(2 * L + l * p, p).transpose();
}

class Descent {
 public:
  Descent(FmlpModel& model, const CoordDataset& data, const TrainConfig& cfg, unsigned restart)
      : model_(model), data_(data), cfg_(cfg), restart_(restart) {}

  RestartTrace run() {
    current_loss_ = empirical_mse(model_, data_);
    if (!std::isfinite(current_loss_)) diverged(restart_, 0);
    trace_.best_loss.reserve(cfg_.max_iters + 1);
    trace_.best_loss.push_back(current_loss_);
    step_ = cfg_.step;
    damping_ = cfg_.damping;

    for (unsigned iter = 1; iter <= cfg_.max_iters; ++iter) {
      const bool moved = cfg_.method == TrainMethod::LevenbergMarquardt ? lm_iteration(iter) : gd_iteration(iter);
      trace_.best_loss.push_back(current_loss_);
      trace_.iterations = iter;
      if (!moved) {
        // No admissible step left: stationary up to the damping range.
        trace_.converged = true;
        break;
      }
      if (iter >= cfg_.patience && trace_.best_loss[iter - cfg_.patience] - current_loss_ < cfg_.tolerance) {
        trace_.converged = true;
        break;
      }
    }
    trace_.final_loss = current_loss_;
    return std::move(trace_);
  }

 private:
  double trial_loss(const FmlpModel& candidate, unsigned iter) const {
    const double loss = empirical_mse(candidate, data_);
    if (!std::isfinite(loss)) diverged(restart_, iter);
    return loss;
  }

  bool gd_iteration(unsigned iter) {
    const LossAndGradient lg = loss_and_gradient(model_, data_);
    FmlpModel candidate = model_;
    candidate.a = project_l1_ball(model_.a - step_ * lg.gradient.a, model_.alpha);
    candidate.beta0 = model_.beta0 - step_ * lg.gradient.beta0;
    candidate.beta = model_.beta - step_ * lg.gradient.beta;
    const double loss = trial_loss(candidate, iter);
    if (loss <= current_loss_) {
      model_ = std::move(candidate);
      current_loss_ = loss;
    } else {
      step_ *= 0.5;
    }
    return step_ > 0.0;
  }

  bool lm_iteration(unsigned iter) {
    const Eigen::Index n = data_.inputs.rows();
    const Eigen::Index L = model_.a.size();
    const Eigen::Index p = model_.beta.cols();

    Eigen::MatrixXd z = data_.inputs * model_.beta.transpose();
    z.rowwise() += model_.beta0.transpose();
    const Eigen::MatrixXd s = z.unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd residual = s * model_.a - data_.targets;
    Eigen::MatrixXd dz = s.array() * (1.0 - s.array());
    dz.array().rowwise() *= model_.a.transpose().array();

    jacobian_.resize(n, L * (p + 2));
    jacobian_.leftCols(L) = s;
    jacobian_.middleCols(L, L) = dz;
    for (Eigen::Index l = 0; l < L; ++l) {
      jacobian_.middleCols(2 * L + l * p, p) = data_.inputs.array().colwise() * dz.col(l).array();
    }
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(jacobian_.cols(), jacobian_.cols());
    normal.selfadjointView<Eigen::Lower>().rankUpdate(jacobian_.transpose());
    normal = normal.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd rhs = jacobian_.transpose() * residual;

    // Marquardt scaling, floored so that columns of idle units stay regular.
    const double floor = 1e-8 * std::max(normal.diagonal().maxCoeff(), 1e-300) + 1e-300;
    const Eigen::VectorXd scaling = normal.diagonal().cwiseMax(floor);
    const Eigen::VectorXd theta = pack(model_);
    FmlpModel candidate = model_;
    for (int attempt = 0; attempt < kMaxDampingIncreases; ++attempt) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += damping_ * scaling;
      const Eigen::VectorXd delta = damped.ldlt().solve(rhs);
      if (delta.allFinite()) {
        unpack(candidate, theta - delta);
        candidate.a = project_l1_ball(candidate.a, model_.alpha);
        const double loss = trial_loss(candidate, iter);
        if (loss <= current_loss_) {
          model_ = std::move(candidate);
          current_loss_ = loss;
          damping_ = std::max(damping_ / kDampingDown, kDampingFloor);
          return true;
        }
      }
      damping_ *= kDampingUp;
    }
    return false;
  }

  FmlpModel& model_;
  const CoordDataset& data_;
  const TrainConfig& cfg_;
  unsigned restart_;
  RestartTrace trace_;
  double current_loss_ = 0.0;
  double step_ = 1.0;
  double damping_ = 1e-3;
  Eigen::MatrixXd jacobian_;
};

}  // namespace

RestartTrace optimize(FmlpModel& model, const CoordDataset& data, const TrainConfig& cfg, unsigned restart_index) {
  data.validate();
  cfg.validate();
  if (model.input_dim() != data.dim()) throw Error(ErrorCode::Shape, "model and dataset dimensions differ");
  return Descent(model, data, cfg, restart_index).run();
}

TrainResult train(const CoordDataset& data, std::size_t hidden, double alpha, const TrainConfig& cfg) {
  data.validate();
  cfg.validate();

  std::vector<FmlpModel> models(cfg.restarts);
  std::vector<RestartTrace> traces(cfg.restarts);
  parallel_for(cfg.restarts, cfg.workers, [&](std::size_t r) {
    const auto restart = static_cast<unsigned>(r);
    models[r] = initial_model(data.dim(), hidden, alpha, cfg.seed, restart);
    traces[r] = optimize(models[r], data, cfg, restart);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < traces.size(); ++r) {
    if (traces[r].final_loss < traces[best].final_loss) best = r;
  }
  TrainResult result{std::move(models[best]), {}};
  result.report.restarts = std::move(traces);
  result.report.best_restart = best;
  result.report.final_loss = result.report.restarts[best].final_loss;
  return result;
}

}  // namespace fmlp
