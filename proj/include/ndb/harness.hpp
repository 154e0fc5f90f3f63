#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "ndb/env.hpp"
#include "ndb/errors.hpp"
#include "ndb/net.hpp"
#include "ndb/policies.hpp"
#include "ndb/rng.hpp"
#include "ndb/uncertainty.hpp"

namespace ndb {

enum class FeatureAnchor { theta_t, theta_0 };

// One experiment: a policy against a synthetic reward over T rounds,
// repeated reps times. Defaults reproduce the reference setup: T=2000, K=5,
// d=5, lambda=1, delta=0.05, nu=1 fixed, width 50, two hidden layers,
// retrain every 20 rounds with 50 gradient steps.
struct ExperimentConfig {
  PolicyKind policy = PolicyKind::ndb_ucb;
  RewardKind function_kind = RewardKind::square;
  double function_scale = 10.0;
  int T = 2000;
  int K = 5;
  int d = 5;
  int reps = 20;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  double kappa_mu = 1.0;
  NuMode nu_mode = NuMode::fixed;
  double nu = 1.0;
  double delta = 0.05;
  double B = 1.0;
  int width = 50;
  int depth = 3;  // weight matrices; 3 = two hidden layers
  double learning_rate = 1e-3;
  int grad_steps = 50;
  int retrain_every = 20;
  FeatureAnchor anchor = FeatureAnchor::theta_t;
  ContextMode context_mode = ContextMode::raw;
  RegularizerMode regularizer = RegularizerMode::practical;
  std::string output_path;
  int threads = 0;  // 0: hardware concurrency
  bool diagnostics = false;
  bool emit_svg = false;

  // Feature dimension the models see (theory contexts are duplicated).
  int input_dim() const { return context_mode == ContextMode::theory ? 2 * d : d; }

  bool binary_mode() const { return is_binary_policy(policy); }

  // Gradient features: 1 in practical runs, 1/sqrt(m) under theory contexts.
  double feature_scale() const {
    if (is_linear_policy(policy) || policy == PolicyKind::random) return 1.0;
    return context_mode == ContextMode::theory
               ? 1.0 / std::sqrt(static_cast<double>(width))
               : 1.0;
  }

  void validate() const {
    if (T < 1) throw ConfigError("ExperimentConfig: T must be >= 1");
    if (K < 2) throw ConfigError("ExperimentConfig: K must be >= 2");
    if (d < 1) throw ConfigError("ExperimentConfig: d must be >= 1");
    if (reps < 1) throw ConfigError("ExperimentConfig: reps must be >= 1");
    if (!(lambda > 0.0)) throw ConfigError("ExperimentConfig: lambda must be positive");
    if (!(kappa_mu > 0.0)) throw ConfigError("ExperimentConfig: kappa_mu must be positive");
    if (!(nu >= 0.0)) throw ConfigError("ExperimentConfig: nu must be >= 0");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("ExperimentConfig: delta in (0,1)");
    if (retrain_every < 1) throw ConfigError("ExperimentConfig: retrain_every must be >= 1");
    if (grad_steps < 0) throw ConfigError("ExperimentConfig: grad_steps must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("ExperimentConfig: learning_rate positive");
    if (threads < 0) throw ConfigError("ExperimentConfig: threads must be >= 0");
    if (!is_linear_policy(policy) && policy != PolicyKind::random) {
      NetworkShape{depth, width, input_dim()}.validate();
    }
  }

  TrainingConfig training_config() const {
    TrainingConfig t;
    t.lambda = lambda;
    t.learning_rate = learning_rate;
    t.grad_steps = grad_steps;
    t.regularizer = regularizer;
    t.loss = binary_mode() ? LossKind::binary : LossKind::dueling;
    return t;
  }
};

// Cumulative regret per round for one repetition. Both arrays are
// non-decreasing and weak <= average at every round.
struct RegretTrace {
  std::vector<double> avg_cum;
  std::vector<double> weak_cum;
  int rep = 0;
  std::uint64_t rep_seed = 0;
};

// Per-round mean and 95% normal-approximation half-width across repetitions.
struct Summary {
  std::vector<double> avg_mean, avg_halfwidth;
  std::vector<double> weak_mean, weak_halfwidth;
};

struct RunDiagnostics {
  std::vector<double> eff_dim;        // per-round effective dimension (rep 0)
  std::vector<double> log_det_ratio;  // per-round log det(V_t / ridge) (rep 0)
  std::int64_t coverage_events = 0;
  std::int64_t coverage_violations = 0;
  double final_train_loss = std::numeric_limits<double>::quiet_NaN();
  double final_grad_norm = std::numeric_limits<double>::quiet_NaN();

  double coverage_violation_rate() const {
    return coverage_events > 0
               ? static_cast<double>(coverage_violations) / static_cast<double>(coverage_events)
               : 0.0;
  }
};

struct RoundRecord {
  Eigen::Index first = 0;
  Eigen::Index second = 0;  // == first in binary mode
  double avg_regret = 0.0;
  double weak_regret = 0.0;
};

namespace detail {

// Incremental log det(I + (kappa/lambda) sum u u^T) tracker for the
// effective-dimension trajectory; only alive when diagnostics are on.
class EffDimTracker {
 public:
  EffDimTracker(Eigen::Index p, double lambda, double kappa_mu)
      : d_inv_(Eigen::MatrixXd::Identity(p, p)), c_(kappa_mu / lambda) {}

  void add(const Eigen::VectorXd& u) {
    const Eigen::VectorXd w = d_inv_ * u;
    const double q = guarded_quadratic_form(u.dot(w));
    log_det_ += std::log1p(c_ * q);
    d_inv_.noalias() -= (c_ / (1.0 + c_ * q)) * w * w.transpose();
  }

  double value() const { return log_det_; }

 private:
  Eigen::MatrixXd d_inv_;
  double c_;
  double log_det_ = 0.0;
};

template <RewardModel M>
M build_model(const ExperimentConfig& cfg, RandomStream& init_rng);

template <>
inline MlpModel build_model<MlpModel>(const ExperimentConfig& cfg, RandomStream& init_rng) {
  return MlpModel::initialized(init_rng, NetworkShape{cfg.depth, cfg.width, cfg.input_dim()});
}

template <>
inline LinearModel build_model<LinearModel>(const ExperimentConfig& cfg, RandomStream&) {
  return LinearModel(cfg.input_dim());
}

// One repetition of the online loop for a trained policy.
template <RewardModel M>
class TypedRun {
 public:
  TypedRun(const ExperimentConfig& cfg, int rep, bool collect_diagnostics)
      : cfg_(cfg),
        streams_(StreamSet::for_repetition(cfg.seed, static_cast<std::uint64_t>(rep))),
        mu_{0.25, cfg.kappa_mu},
        f_(make_reward(cfg.function_kind, cfg.function_scale, cfg.input_dim(),
                       streams_.environment)),
        model_(build_model<M>(cfg, streams_.network_init)),
        theta0_(model_.flat_params()),
        anchor_model_(cfg.anchor == FeatureAnchor::theta_0 ? std::optional<M>(model_)
                                                           : std::nullopt),
        precision_(precision_init(model_.param_count(), cfg.lambda, cfg.kappa_mu,
                                  cfg.feature_scale(), /*track_V=*/false)),
        collect_diag_(collect_diagnostics) {
    trace_.rep = rep;
    trace_.rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    trace_.avg_cum.reserve(static_cast<std::size_t>(cfg.T));
    trace_.weak_cum.reserve(static_cast<std::size_t>(cfg.T));
    if (collect_diag_ || cfg.nu_mode == NuMode::theoretical)
      eff_dim_tracker_.emplace(model_.param_count(), cfg.lambda, cfg.kappa_mu);
  }

  RoundRecord round(int t) {
    try {
      return round_impl(t);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (round " + std::to_string(t) + ")");
    }
  }

  RegretTrace& trace() { return trace_; }
  RunDiagnostics& diagnostics() { return diag_; }

 private:
  RoundRecord round_impl(int t) {
    const RoundContexts contexts =
        make_round_contexts(streams_.environment, cfg_.K, cfg_.d, cfg_.context_mode, t);

    if ((t - 1) % cfg_.retrain_every == 0) retrain();

    const Eigen::VectorXd h = model_.batch_forward(contexts.features);
    const Eigen::MatrixXd g = anchor_gradients(contexts);
    Eigen::MatrixXd w;
    w.noalias() = precision_.V_inv * g;

    const SelectionConfig sel{resolve_nu(), cfg_.lambda, cfg_.kappa_mu};

    RoundRecord rec;
    if (cfg_.binary_mode()) {
      rec = binary_round(t, contexts, h, g, w, sel);
    } else {
      rec = duel_round(t, contexts, h, g, w, sel);
    }

    if (collect_diag_) record_diagnostics(contexts, g);
    return rec;
  }

  Eigen::MatrixXd anchor_gradients(const RoundContexts& contexts) const {
    const M& anchor = anchor_model_ ? *anchor_model_ : model_;
    Eigen::MatrixXd g(model_.param_count(), contexts.arms());
    for (Eigen::Index i = 0; i < contexts.arms(); ++i)
      g.col(i) = anchor.param_gradient(contexts.features.row(i).transpose());
    return g;
  }

  double resolve_nu() {
    if (cfg_.nu_mode == NuMode::fixed) return cfg_.nu;
    // Theoretical mode uses the effective dimension accumulated so far.
    ConfidenceConfig cc{cfg_.nu_mode, cfg_.nu, cfg_.B, cfg_.delta, cfg_.lambda, cfg_.kappa_mu};
    const double d_tilde = eff_dim_tracker_ ? eff_dim_tracker_->value() : 0.0;
    return theoretical_nu(cc, d_tilde);
  }

  void retrain() {
    TrainResult result;
    if (cfg_.binary_mode()) {
      result = train(model_, theta0_, std::span<const BinaryObservation>(binary_history_),
                     cfg_.training_config());
    } else {
      result = train(model_, theta0_, std::span<const PreferenceObservation>(duel_history_),
                     cfg_.training_config());
    }
    diag_.final_train_loss = result.final_loss;
    diag_.final_grad_norm = result.final_grad_norm;
    if (cfg_.anchor == FeatureAnchor::theta_t) rebuild_precision();
  }

  void rebuild_precision() {
    RebuildInfo info;
    precision_ = precision_rebuild(history_features(), model_.param_count(), cfg_.lambda,
                                   cfg_.kappa_mu, cfg_.feature_scale(), /*track_V=*/false,
                                   &info);
    log_det_base_ = info.log_det_ratio;
    log_det_increments_ = 0.0;
  }

  // Features of the stored history at the current anchor parameters,
  // already feature-scaled.
  std::vector<Eigen::VectorXd> history_features() const {
    const M& anchor = anchor_model_ ? *anchor_model_ : model_;
    const double s = cfg_.feature_scale();
    std::vector<Eigen::VectorXd> features;
    if (cfg_.binary_mode()) {
      features.reserve(binary_history_.size());
      for (const auto& obs : binary_history_)
        features.push_back(s * anchor.param_gradient(obs.x));
    } else {
      features.reserve(duel_history_.size());
      for (const auto& obs : duel_history_)
        features.push_back(s * (anchor.param_gradient(obs.x1) - anchor.param_gradient(obs.x2)));
    }
    return features;
  }

  RoundRecord duel_round(int t, const RoundContexts& contexts, const Eigen::VectorXd& h,
                         const Eigen::MatrixXd& g, Eigen::MatrixXd& w,
                         const SelectionConfig& sel) {
    DuelChoice choice = select_with_recovery(h, g, w, sel);

    if (collect_diag_) record_coverage(contexts, h, g, w, sel);

    const Eigen::VectorXd x1 = contexts.features.row(choice.first).transpose();
    const Eigen::VectorXd x2 = contexts.features.row(choice.second).transpose();
    const PreferenceObservation obs =
        sample_preference(f_, mu_, x1, x2, streams_.environment, t);

    // Same-arm duels carry no preference information; keep them out of the
    // training data and the precision state.
    const bool distinct =
        choice.first != choice.second && (x1.array() != x2.array()).any();
    if (distinct) {
      duel_history_.push_back(obs);
      const double s = cfg_.feature_scale();
      const Eigen::VectorXd u = s * (g.col(choice.first) - g.col(choice.second));
      const Eigen::VectorXd vinv_u = s * (w.col(choice.first) - w.col(choice.second));
      if (collect_diag_)
        log_det_increments_ += std::log1p(std::max(0.0, u.dot(vinv_u)));
      precision_update(precision_, u, &vinv_u);
    }

    const auto [best, best_value] = best_arm(f_, contexts);
    const double f1 = eval_reward(f_, x1);
    const double f2 = eval_reward(f_, x2);
    RoundRecord rec;
    rec.first = choice.first;
    rec.second = choice.second;
    rec.avg_regret = std::max(0.0, best_value - 0.5 * (f1 + f2));
    rec.weak_regret = std::max(0.0, best_value - std::max(f1, f2));
    push_regret(rec);
    (void)best;
    return rec;
  }

  RoundRecord binary_round(int t, const RoundContexts& contexts, const Eigen::VectorXd& h,
                           const Eigen::MatrixXd& g, Eigen::MatrixXd& w,
                           const SelectionConfig& sel) {
    Eigen::Index arm;
    if (is_ts_policy(cfg_.policy)) {
      arm = select_arm_ts(h, precision_, g, sel, streams_.policy);
    } else {
      arm = select_arm_ucb(h, precision_, g, sel);
    }

    const Eigen::VectorXd x = contexts.features.row(arm).transpose();
    const BinaryObservation obs = sample_binary(f_, mu_, x, streams_.environment, t);
    binary_history_.push_back(obs);

    const double s = cfg_.feature_scale();
    const Eigen::VectorXd u = s * g.col(arm);
    const Eigen::VectorXd vinv_u = s * w.col(arm);
    if (collect_diag_)
      log_det_increments_ += std::log1p(std::max(0.0, u.dot(vinv_u)));
    precision_update(precision_, u, &vinv_u);

    const auto [best, best_value] = best_arm(f_, contexts);
    // Binary-feedback regret is measured through the link.
    const double r = std::max(0.0, mu_.value(best_value) - mu_.value(eval_reward(f_, x)));
    RoundRecord rec;
    rec.first = arm;
    rec.second = arm;
    rec.avg_regret = r;
    rec.weak_regret = r;
    push_regret(rec);
    (void)best;
    return rec;
  }

  DuelChoice select_with_recovery(const Eigen::VectorXd& h, const Eigen::MatrixXd& g,
                                  Eigen::MatrixXd& w, const SelectionConfig& sel) {
    auto attempt = [&]() {
      if (is_ts_policy(cfg_.policy))
        return select_duel_ts(h, precision_, g, sel, streams_.policy);
      return select_duel_ucb(h, precision_, g, sel);
    };
    try {
      return attempt();
    } catch (const NumericalError&) {
      // Degenerate inverse: rebuild from the stored history and retry once.
      rebuild_precision();
      w.noalias() = precision_.V_inv * g;
      return attempt();
    }
  }

  void record_coverage(const RoundContexts& contexts, const Eigen::VectorXd& h,
                       const Eigen::MatrixXd& g, const Eigen::MatrixXd& w,
                       const SelectionConfig& sel) {
    const double s2 = cfg_.feature_scale() * cfg_.feature_scale();
    const double factor = (sel.lambda / sel.kappa_mu) * s2;
    Eigen::VectorXd f_values(contexts.arms());
    for (Eigen::Index i = 0; i < contexts.arms(); ++i)
      f_values[i] = eval_reward(f_, contexts.features.row(i).transpose());
    for (Eigen::Index i = 0; i < contexts.arms(); ++i) {
      for (Eigen::Index j = i + 1; j < contexts.arms(); ++j) {
        const double q =
            std::max(0.0, (g.col(i) - g.col(j)).dot(w.col(i) - w.col(j)));
        const double sigma = std::sqrt(factor * q);
        const double gap =
            std::abs((f_values[i] - f_values[j]) - (h[i] - h[j]));
        ++diag_.coverage_events;
        if (gap > sel.nu * sigma) ++diag_.coverage_violations;
      }
    }
  }

  void record_diagnostics(const RoundContexts& contexts, const Eigen::MatrixXd& g) {
    if (eff_dim_tracker_) {
      const double s = cfg_.feature_scale();
      if (cfg_.binary_mode()) {
        for (Eigen::Index i = 0; i < contexts.arms(); ++i)
          eff_dim_tracker_->add(s * g.col(i));
      } else {
        for (Eigen::Index i = 0; i < contexts.arms(); ++i)
          for (Eigen::Index j = i + 1; j < contexts.arms(); ++j)
            eff_dim_tracker_->add(s * (g.col(i) - g.col(j)));
      }
      diag_.eff_dim.push_back(eff_dim_tracker_->value());
    }
    diag_.log_det_ratio.push_back(log_det_base_ + log_det_increments_);
  }

  void push_regret(const RoundRecord& rec) {
    const double prev_avg = trace_.avg_cum.empty() ? 0.0 : trace_.avg_cum.back();
    const double prev_weak = trace_.weak_cum.empty() ? 0.0 : trace_.weak_cum.back();
    trace_.avg_cum.push_back(prev_avg + rec.avg_regret);
    trace_.weak_cum.push_back(prev_weak + rec.weak_regret);
  }

  ExperimentConfig cfg_;
  StreamSet streams_;
  LinkFunction mu_;
  SyntheticReward f_;
  M model_;
  Eigen::VectorXd theta0_;
  std::optional<M> anchor_model_;
  PrecisionState precision_;
  std::vector<PreferenceObservation> duel_history_;
  std::vector<BinaryObservation> binary_history_;
  RegretTrace trace_;
  RunDiagnostics diag_;
  bool collect_diag_ = false;
  std::optional<EffDimTracker> eff_dim_tracker_;
  double log_det_base_ = 0.0;
  double log_det_increments_ = 0.0;
};

// The uniform baseline needs no model and no precision state.
class RandomRun {
 public:
  RandomRun(const ExperimentConfig& cfg, int rep)
      : cfg_(cfg),
        streams_(StreamSet::for_repetition(cfg.seed, static_cast<std::uint64_t>(rep))),
        mu_{0.25, cfg.kappa_mu},
        f_(make_reward(cfg.function_kind, cfg.function_scale, cfg.input_dim(),
                       streams_.environment)) {
    trace_.rep = rep;
    trace_.rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep));
  }

  RoundRecord round(int t) {
    const RoundContexts contexts =
        make_round_contexts(streams_.environment, cfg_.K, cfg_.d, cfg_.context_mode, t);
    const DuelChoice choice = select_random_duel(contexts.arms(), streams_.policy);
    const Eigen::VectorXd x1 = contexts.features.row(choice.first).transpose();
    const Eigen::VectorXd x2 = contexts.features.row(choice.second).transpose();
    // Feedback is observed but unused; drawing it keeps stream layouts
    // aligned with the trained policies.
    (void)sample_preference(f_, mu_, x1, x2, streams_.environment, t);

    const auto [best, best_value] = best_arm(f_, contexts);
    const double f1 = eval_reward(f_, x1);
    const double f2 = eval_reward(f_, x2);
    RoundRecord rec;
    rec.first = choice.first;
    rec.second = choice.second;
    rec.avg_regret = std::max(0.0, best_value - 0.5 * (f1 + f2));
    rec.weak_regret = std::max(0.0, best_value - std::max(f1, f2));
    const double prev_avg = trace_.avg_cum.empty() ? 0.0 : trace_.avg_cum.back();
    const double prev_weak = trace_.weak_cum.empty() ? 0.0 : trace_.weak_cum.back();
    trace_.avg_cum.push_back(prev_avg + rec.avg_regret);
    trace_.weak_cum.push_back(prev_weak + rec.weak_regret);
    (void)best;
    return rec;
  }

  RegretTrace& trace() { return trace_; }
  RunDiagnostics& diagnostics() { return diag_; }

 private:
  ExperimentConfig cfg_;
  StreamSet streams_;
  LinkFunction mu_;
  SyntheticReward f_;
  RegretTrace trace_;
  RunDiagnostics diag_;
};

}  // namespace detail

// One full repetition; exposed so tests can drive individual rounds.
class RepetitionRun {
 public:
  RepetitionRun(const ExperimentConfig& cfg, int rep, bool collect_diagnostics = false) {
    if (cfg.policy == PolicyKind::random) {
      impl_.emplace<detail::RandomRun>(cfg, rep);
    } else if (is_linear_policy(cfg.policy)) {
      impl_.emplace<detail::TypedRun<LinearModel>>(cfg, rep, collect_diagnostics);
    } else {
      impl_.emplace<detail::TypedRun<MlpModel>>(cfg, rep, collect_diagnostics);
    }
  }

  RoundRecord round(int t) {
    return std::visit([t](auto& run) { return run.round(t); }, impl_);
  }

  RegretTrace& trace() {
    return std::visit([](auto& run) -> RegretTrace& { return run.trace(); }, impl_);
  }

  RunDiagnostics& diagnostics() {
    return std::visit([](auto& run) -> RunDiagnostics& { return run.diagnostics(); }, impl_);
  }

 private:
  std::variant<detail::TypedRun<MlpModel>, detail::TypedRun<LinearModel>, detail::RandomRun>
      impl_;
};

struct ExperimentResult {
  std::vector<RegretTrace> traces;
  RunDiagnostics diagnostics;  // collected on repetition 0 when enabled
};

// Runs all repetitions, in parallel when threads allow. Repetition i is
// seeded by mix_seed(seed, i), so results are independent of the thread
// count and worker scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.traces.resize(static_cast<std::size_t>(cfg.reps));

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::max(1, std::min(cfg.reps, cfg.threads > 0 ? cfg.threads : hw));

  std::atomic<int> next_rep{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::optional<std::string> first_error;

  auto worker = [&]() {
    for (;;) {
      if (stop.load()) return;
      const int rep = next_rep.fetch_add(1);
      if (rep >= cfg.reps) return;
      try {
        RepetitionRun run(cfg, rep, cfg.diagnostics && rep == 0);
        for (int t = 1; t <= cfg.T; ++t) run.round(t);
        result.traces[static_cast<std::size_t>(rep)] = std::move(run.trace());
        if (cfg.diagnostics && rep == 0) result.diagnostics = std::move(run.diagnostics());
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error)
          first_error = "repetition " + std::to_string(rep) + " failed: " + e.what();
        stop.store(true);
        return;
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (first_error) throw NumericalError(*first_error);
  return result;
}

// Per-round mean and 1.96 * sd / sqrt(n) half-width (sample sd, n-1); the
// half-width is 0 for a single repetition.
inline Summary aggregate(const std::vector<RegretTrace>& traces) {
  if (traces.empty()) throw InputError("aggregate: no traces");
  const std::size_t T = traces.front().avg_cum.size();
  for (const auto& tr : traces)
    if (tr.avg_cum.size() != T || tr.weak_cum.size() != T)
      throw InputError("aggregate: trace length mismatch");

  const double n = static_cast<double>(traces.size());
  Summary s;
  s.avg_mean.resize(T);
  s.avg_halfwidth.resize(T);
  s.weak_mean.resize(T);
  s.weak_halfwidth.resize(T);

  auto column_stats = [&](std::size_t t, bool weak) {
    double mean = 0.0;
    for (const auto& tr : traces) mean += (weak ? tr.weak_cum[t] : tr.avg_cum[t]);
    mean /= n;
    double ss = 0.0;
    for (const auto& tr : traces) {
      const double dev = (weak ? tr.weak_cum[t] : tr.avg_cum[t]) - mean;
      ss += dev * dev;
    }
    const double sd = traces.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return std::pair<double, double>(mean, 1.96 * sd / std::sqrt(n));
  };

  for (std::size_t t = 0; t < T; ++t) {
    auto [am, ah] = column_stats(t, false);
    auto [wm, wh] = column_stats(t, true);
    s.avg_mean[t] = am;
    s.avg_halfwidth[t] = ah;
    s.weak_mean[t] = wm;
    s.weak_halfwidth[t] = wh;
  }
  return s;
}

}  // namespace ndb
