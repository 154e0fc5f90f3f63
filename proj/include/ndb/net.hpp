#pragma once

#include <Eigen/Core>
#include <cmath>
#include <concepts>
#include <span>
#include <utility>
#include <vector>

#include "ndb/env.hpp"
#include "ndb/errors.hpp"
#include "ndb/link.hpp"
#include "ndb/rng.hpp"

namespace ndb {

// Fully-connected ReLU network h(x) = W_L relu(W_{L-1} relu(... relu(W_1 x))).
// depth counts weight matrices, so depth L has L-1 ReLU layers.
struct NetworkShape {
  int depth = 3;
  int width = 50;
  int input_dim = 5;

  void validate() const {
    if (depth < 2) throw ConfigError("NetworkShape: depth must be >= 2");
    if (width < 2 || width % 2 != 0)
      throw ConfigError("NetworkShape: width must be a positive even number");
    if (input_dim < 1) throw ConfigError("NetworkShape: input_dim must be >= 1");
  }

  // d*m + (L-2)*m^2 + m, from the actual layer list.
  Eigen::Index param_count() const {
    const Eigen::Index m = width, d = input_dim, L = depth;
    return d * m + (L - 2) * m * m + m;
  }
};

// All weight matrices, flattenable to a p-vector (layer order, column-major
// within each layer).
struct NetworkParams {
  std::vector<Eigen::MatrixXd> weights;

  Eigen::Index param_count() const {
    Eigen::Index p = 0;
    for (const auto& w : weights) p += w.size();
    return p;
  }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(param_count());
    Eigen::Index at = 0;
    for (const auto& w : weights) {
      out.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
      at += w.size();
    }
    return out;
  }

  void set_from_flat(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != param_count()) throw InputError("NetworkParams: flat size mismatch");
    Eigen::Index at = 0;
    for (auto& w : weights) {
      Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = v.segment(at, w.size());
      at += w.size();
    }
  }
};

// Symmetric initialization: hidden layers are block-diagonal duplicates
// [[A,0],[0,A]] with A ~ N(0, 4/m), the output layer is [w, -w] with
// w ~ N(0, 2/m). Together with duplicated inputs this gives h(x; theta0) = 0.
// When input_dim is odd the first layer falls back to stacked duplicate rows
// [A; A], which zeroes the initial output for every input.
inline NetworkParams init_symmetric(RandomStream& rng, const NetworkShape& shape) {
  shape.validate();
  const int m = shape.width, d = shape.input_dim, L = shape.depth;
  const double hidden_sd = 2.0 / std::sqrt(static_cast<double>(m));
  const double out_sd = std::sqrt(2.0 / static_cast<double>(m));

  auto gaussian_block = [&](Eigen::Index rows, Eigen::Index cols, double sd) {
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = sd * rng.normal();
    return a;
  };

  NetworkParams params;
  params.weights.reserve(static_cast<std::size_t>(L));
  for (int l = 1; l < L; ++l) {
    const int cols = (l == 1) ? d : m;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, cols);
    if (cols % 2 == 0) {
      const Eigen::MatrixXd a = gaussian_block(m / 2, cols / 2, hidden_sd);
      w.topLeftCorner(m / 2, cols / 2) = a;
      w.bottomRightCorner(m / 2, cols / 2) = a;
    } else {
      const Eigen::MatrixXd a = gaussian_block(m / 2, cols, hidden_sd);
      w.topRows(m / 2) = a;
      w.bottomRows(m / 2) = a;
    }
    params.weights.push_back(std::move(w));
  }

  Eigen::MatrixXd out(1, m);
  const Eigen::MatrixXd w_half = gaussian_block(1, m / 2, out_sd);
  out.leftCols(m / 2) = w_half;
  out.rightCols(m / 2) = -w_half;
  params.weights.push_back(std::move(out));
  return params;
}

// Reward model backed by the ReLU network. forward/param_gradient are pure
// and safe to call concurrently on a shared const instance.
class MlpModel {
 public:
  MlpModel(NetworkShape shape, NetworkParams params)
      : shape_(shape), params_(std::move(params)) {
    shape_.validate();
    if (params_.param_count() != shape_.param_count())
      throw ConfigError("MlpModel: params do not match shape");
  }

  static MlpModel initialized(RandomStream& rng, const NetworkShape& shape) {
    return MlpModel(shape, init_symmetric(rng, shape));
  }

  const NetworkShape& shape() const { return shape_; }
  const NetworkParams& params() const { return params_; }
  Eigen::Index param_count() const { return shape_.param_count(); }
  Eigen::Index input_dim() const { return shape_.input_dim; }

  double forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    const int L = shape_.depth;
    Eigen::VectorXd a = x;
    for (int l = 0; l < L - 1; ++l) a = (params_.weights[l] * a).cwiseMax(0.0);
    return (params_.weights[L - 1] * a)(0);
  }

  // g(x; theta): gradient of h with respect to every parameter, flattened.
  // ReLU subgradient at exactly 0 is taken as 0.
  Eigen::VectorXd param_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    const int L = shape_.depth;
    std::vector<Eigen::VectorXd> acts(L);     // acts[l]: input to layer l
    std::vector<Eigen::VectorXd> pre(L - 1);  // pre[l]: pre-activation of layer l
    acts[0] = x;
    for (int l = 0; l < L - 1; ++l) {
      pre[l].noalias() = params_.weights[l] * acts[l];
      if (l + 1 < L) acts[l + 1] = pre[l].cwiseMax(0.0);
    }

    Eigen::VectorXd flat(param_count());
    Eigen::Index at = param_count() - shape_.width;
    flat.segment(at, shape_.width) = acts[L - 1];  // d h / d W_L = a_{L-1}^T

    Eigen::VectorXd delta =
        params_.weights[L - 1].row(0).transpose().cwiseProduct(relu_mask(pre[L - 2]));
    for (int l = L - 2; l >= 0; --l) {
      const Eigen::MatrixXd& w = params_.weights[l];
      at -= w.size();
      Eigen::Map<Eigen::MatrixXd> block(flat.data() + at, w.rows(), w.cols());
      block.noalias() = delta * acts[l].transpose();
      if (l > 0) delta = (w.transpose() * delta).cwiseProduct(relu_mask(pre[l - 1]));
    }
    return flat;
  }

  // h for every row of X.
  Eigen::VectorXd batch_forward(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.cols() != shape_.input_dim) throw InputError("MlpModel: batch dimension mismatch");
    const int L = shape_.depth;
    Eigen::MatrixXd a = X;
    for (int l = 0; l < L - 1; ++l)
      a = (a * params_.weights[l].transpose()).cwiseMax(0.0);
    return a * params_.weights[L - 1].row(0).transpose();
  }

  // Gradient of sum_s w_s h(x_s) with respect to the parameters, flattened.
  // One GEMM-based backward pass over the whole batch.
  Eigen::VectorXd weighted_param_grad(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& w) const {
    if (X.cols() != shape_.input_dim) throw InputError("MlpModel: batch dimension mismatch");
    if (X.rows() != w.size()) throw InputError("MlpModel: weight count mismatch");
    const int L = shape_.depth;

    std::vector<Eigen::MatrixXd> acts(L);
    std::vector<Eigen::MatrixXd> pre(L - 1);
    acts[0] = X;
    for (int l = 0; l < L - 1; ++l) {
      pre[l].noalias() = acts[l] * params_.weights[l].transpose();
      acts[l + 1] = pre[l].cwiseMax(0.0);
    }

    Eigen::VectorXd flat(param_count());
    Eigen::Index at = param_count() - shape_.width;
    flat.segment(at, shape_.width).noalias() = acts[L - 1].transpose() * w;

    Eigen::MatrixXd delta =
        (w * params_.weights[L - 1].row(0)).cwiseProduct(relu_mask_matrix(pre[L - 2]));
    for (int l = L - 2; l >= 0; --l) {
      const Eigen::MatrixXd& wl = params_.weights[l];
      at -= wl.size();
      Eigen::Map<Eigen::MatrixXd> block(flat.data() + at, wl.rows(), wl.cols());
      block.noalias() = delta.transpose() * acts[l];
      if (l > 0) delta = (delta * wl).cwiseProduct(relu_mask_matrix(pre[l - 1]));
    }
    return flat;
  }

  Eigen::VectorXd flat_params() const { return params_.flatten(); }

  void set_flat_params(const Eigen::Ref<const Eigen::VectorXd>& v) {
    params_.set_from_flat(v);
  }

  // 1/m width scaling of the theoretical loss data term.
  double loss_data_scale() const { return 1.0 / static_cast<double>(shape_.width); }

 private:
  static Eigen::VectorXd relu_mask(const Eigen::VectorXd& z) {
    return (z.array() > 0.0).cast<double>();
  }
  static Eigen::MatrixXd relu_mask_matrix(const Eigen::MatrixXd& z) {
    return (z.array() > 0.0).cast<double>();
  }
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != shape_.input_dim) throw InputError("MlpModel: input dimension mismatch");
  }

  NetworkShape shape_;
  NetworkParams params_;
};

// Depth-degenerate model for the linear baselines: h(x) = x . theta and
// g(x) = x, sharing the trainer and selection paths with the network.
class LinearModel {
 public:
  explicit LinearModel(Eigen::Index dim) : theta_(Eigen::VectorXd::Zero(dim)) {}
  explicit LinearModel(Eigen::VectorXd theta) : theta_(std::move(theta)) {}

  Eigen::Index param_count() const { return theta_.size(); }
  Eigen::Index input_dim() const { return theta_.size(); }

  double forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    return theta_.dot(x);
  }

  Eigen::VectorXd param_gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    return x;
  }

  Eigen::VectorXd batch_forward(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.cols() != theta_.size()) throw InputError("LinearModel: batch dimension mismatch");
    return X * theta_;
  }

  Eigen::VectorXd weighted_param_grad(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& w) const {
    if (X.cols() != theta_.size()) throw InputError("LinearModel: batch dimension mismatch");
    return X.transpose() * w;
  }

  Eigen::VectorXd flat_params() const { return theta_; }
  void set_flat_params(const Eigen::Ref<const Eigen::VectorXd>& v) { theta_ = v; }
  const Eigen::VectorXd& theta() const { return theta_; }

  double loss_data_scale() const { return 1.0; }

 private:
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != theta_.size()) throw InputError("LinearModel: input dimension mismatch");
  }

  Eigen::VectorXd theta_;
};

template <typename M>
concept RewardModel = requires(const M cm, M m, const Eigen::VectorXd& x,
                               const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  { cm.param_count() } -> std::convertible_to<Eigen::Index>;
  { cm.input_dim() } -> std::convertible_to<Eigen::Index>;
  { cm.forward(x) } -> std::convertible_to<double>;
  { cm.param_gradient(x) } -> std::convertible_to<Eigen::VectorXd>;
  { cm.batch_forward(X) } -> std::convertible_to<Eigen::VectorXd>;
  { cm.weighted_param_grad(X, w) } -> std::convertible_to<Eigen::VectorXd>;
  { cm.flat_params() } -> std::convertible_to<Eigen::VectorXd>;
  { cm.loss_data_scale() } -> std::convertible_to<double>;
  m.set_flat_params(x);
};

enum class RegularizerMode { practical, theoretical };
enum class LossKind { dueling, binary };

struct TrainingConfig {
  double lambda = 1.0;
  double learning_rate = 1e-3;
  int grad_steps = 50;
  RegularizerMode regularizer = RegularizerMode::practical;
  LossKind loss = LossKind::dueling;

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("TrainingConfig: lambda must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("TrainingConfig: learning_rate must be positive");
    if (grad_steps < 0) throw ConfigError("TrainingConfig: grad_steps must be >= 0");
  }
};

namespace detail {

struct PackedDuels {
  Eigen::MatrixXd x1, x2;
  Eigen::VectorXd y;
};

inline PackedDuels pack(std::span<const PreferenceObservation> data, Eigen::Index dim) {
  PackedDuels out;
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  out.x1.resize(n, dim);
  out.x2.resize(n, dim);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = data[static_cast<std::size_t>(i)];
    if (obs.x1.size() != dim || obs.x2.size() != dim)
      throw InputError("pack: observation dimension mismatch");
    out.x1.row(i) = obs.x1.transpose();
    out.x2.row(i) = obs.x2.transpose();
    out.y[i] = static_cast<double>(obs.y);
  }
  return out;
}

struct PackedBinary {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

inline PackedBinary pack(std::span<const BinaryObservation> data, Eigen::Index dim) {
  PackedBinary out;
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  out.x.resize(n, dim);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = data[static_cast<std::size_t>(i)];
    if (obs.x.size() != dim) throw InputError("pack: observation dimension mismatch");
    out.x.row(i) = obs.x.transpose();
    out.y[i] = static_cast<double>(obs.y);
  }
  return out;
}

// -sum_s log mu((-1)^{1-y_s} z_s); each summand is >= 0.
inline double duel_data_term(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double sign = 2.0 * y[i] - 1.0;
    total -= log_link_value(sign * z[i]);
  }
  return total;
}

// -sum_s [y_s log mu(z_s) + (1-y_s) log(1 - mu(z_s))].
inline double binary_data_term(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    total -= y[i] * log_link_value(z[i]) + (1.0 - y[i]) * log_link_value(-z[i]);
  }
  return total;
}

inline double regularizer_value(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta0,
                                const TrainingConfig& cfg) {
  if (cfg.regularizer == RegularizerMode::theoretical)
    return 0.5 * cfg.lambda * (theta - theta0).squaredNorm();
  return cfg.lambda * theta.squaredNorm();
}

inline Eigen::VectorXd regularizer_grad(const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& theta0,
                                        const TrainingConfig& cfg) {
  if (cfg.regularizer == RegularizerMode::theoretical)
    return cfg.lambda * (theta - theta0);
  return 2.0 * cfg.lambda * theta;
}

}  // namespace detail

// Cross-entropy over the BTL link for duels. The theoretical mode scales the
// data term by the model's 1/m and anchors the regularizer at theta0; the
// practical mode drops the scaling and uses lambda * |theta|^2.
template <RewardModel M>
double dueling_loss(const M& model, const Eigen::VectorXd& theta0,
                    std::span<const PreferenceObservation> data, const TrainingConfig& cfg) {
  cfg.validate();
  const auto packed = detail::pack(data, model.input_dim());
  const Eigen::VectorXd z =
      data.empty() ? Eigen::VectorXd()
                   : Eigen::VectorXd(model.batch_forward(packed.x1) -
                                     model.batch_forward(packed.x2));
  const double scale =
      cfg.regularizer == RegularizerMode::theoretical ? model.loss_data_scale() : 1.0;
  return scale * detail::duel_data_term(z, packed.y) +
         detail::regularizer_value(model.flat_params(), theta0, cfg);
}

template <RewardModel M>
double binary_loss(const M& model, const Eigen::VectorXd& theta0,
                   std::span<const BinaryObservation> data, const TrainingConfig& cfg) {
  cfg.validate();
  const auto packed = detail::pack(data, model.input_dim());
  const Eigen::VectorXd z =
      data.empty() ? Eigen::VectorXd() : Eigen::VectorXd(model.batch_forward(packed.x));
  const double scale =
      cfg.regularizer == RegularizerMode::theoretical ? model.loss_data_scale() : 1.0;
  return scale * detail::binary_data_term(z, packed.y) +
         detail::regularizer_value(model.flat_params(), theta0, cfg);
}

struct TrainResult {
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
  int steps = 0;
};

namespace detail {

// Full-batch gradient descent on either loss; the per-sample residual is
// mu(.) - y in both feedback modes.
template <RewardModel M, typename EvalZ, typename GradData>
TrainResult run_gd_impl(M& model, const Eigen::VectorXd& theta0, const TrainingConfig& cfg,
                        Eigen::Index n, EvalZ eval_z, GradData grad_data,
                        double (*data_term)(const Eigen::VectorXd&, const Eigen::VectorXd&),
                        const Eigen::VectorXd& y) {
  const double scale =
      cfg.regularizer == RegularizerMode::theoretical ? model.loss_data_scale() : 1.0;
  Eigen::VectorXd theta = model.flat_params();

  auto loss_at = [&](const Eigen::VectorXd& z) {
    return (n > 0 ? scale * data_term(z, y) : 0.0) + regularizer_value(theta, theta0, cfg);
  };
  auto grad_at = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    Eigen::VectorXd g = regularizer_grad(theta, theta0, cfg);
    if (n > 0) {
      Eigen::VectorXd residual(n);
      for (Eigen::Index i = 0; i < n; ++i) residual[i] = link_value(z[i]) - y[i];
      g.noalias() += scale * grad_data(residual);
    }
    return g;
  };

  for (int step = 0; step < cfg.grad_steps; ++step) {
    const Eigen::VectorXd z = eval_z();
    if (!std::isfinite(loss_at(z))) throw TrainingDivergedError(step);
    theta -= cfg.learning_rate * grad_at(z);
    model.set_flat_params(theta);
  }

  const Eigen::VectorXd z = eval_z();
  TrainResult result;
  result.final_loss = loss_at(z);
  result.final_grad_norm = grad_at(z).norm();
  result.steps = cfg.grad_steps;
  if (!std::isfinite(result.final_loss)) throw TrainingDivergedError(cfg.grad_steps);
  return result;
}

}  // namespace detail

// Trains in place starting from the model's current parameters (warm start);
// grad_steps = 0 leaves them untouched.
template <RewardModel M>
TrainResult train(M& model, const Eigen::VectorXd& theta0,
                  std::span<const PreferenceObservation> data, const TrainingConfig& cfg) {
  cfg.validate();
  if (cfg.loss != LossKind::dueling) throw ConfigError("train: config expects binary data");
  const auto packed = detail::pack(data, model.input_dim());
  const Eigen::Index n = packed.y.size();
  return detail::run_gd_impl(
      model, theta0, cfg, n,
      [&]() -> Eigen::VectorXd {
        if (n == 0) return Eigen::VectorXd();
        return model.batch_forward(packed.x1) - model.batch_forward(packed.x2);
      },
      [&](const Eigen::VectorXd& residual) -> Eigen::VectorXd {
        return model.weighted_param_grad(packed.x1, residual) -
               model.weighted_param_grad(packed.x2, residual);
      },
      &detail::duel_data_term, packed.y);
}

template <RewardModel M>
TrainResult train(M& model, const Eigen::VectorXd& theta0,
                  std::span<const BinaryObservation> data, const TrainingConfig& cfg) {
  cfg.validate();
  if (cfg.loss != LossKind::binary) throw ConfigError("train: config expects dueling data");
  const auto packed = detail::pack(data, model.input_dim());
  const Eigen::Index n = packed.y.size();
  return detail::run_gd_impl(
      model, theta0, cfg, n,
      [&]() -> Eigen::VectorXd {
        if (n == 0) return Eigen::VectorXd();
        return model.batch_forward(packed.x);
      },
      [&](const Eigen::VectorXd& residual) -> Eigen::VectorXd {
        return model.weighted_param_grad(packed.x, residual);
      },
      &detail::binary_data_term, packed.y);
}

}  // namespace ndb
