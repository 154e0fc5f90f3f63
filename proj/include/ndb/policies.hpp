#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "ndb/errors.hpp"
#include "ndb/rng.hpp"
#include "ndb/uncertainty.hpp"

namespace ndb {

enum class PolicyKind {
  ndb_ucb,
  ndb_ts,
  ncbf_ucb,
  ncbf_ts,
  lindb_ucb,
  lindb_ts,
  lincbf_ucb,
  lincbf_ts,
  random,
};

inline bool is_binary_policy(PolicyKind k) {
  return k == PolicyKind::ncbf_ucb || k == PolicyKind::ncbf_ts ||
         k == PolicyKind::lincbf_ucb || k == PolicyKind::lincbf_ts;
}
inline bool is_linear_policy(PolicyKind k) {
  return k == PolicyKind::lindb_ucb || k == PolicyKind::lindb_ts ||
         k == PolicyKind::lincbf_ucb || k == PolicyKind::lincbf_ts;
}
inline bool is_ts_policy(PolicyKind k) {
  return k == PolicyKind::ndb_ts || k == PolicyKind::ncbf_ts ||
         k == PolicyKind::lindb_ts || k == PolicyKind::lincbf_ts;
}

inline const char* policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::ndb_ucb: return "ndb-ucb";
    case PolicyKind::ndb_ts: return "ndb-ts";
    case PolicyKind::ncbf_ucb: return "ncbf-ucb";
    case PolicyKind::ncbf_ts: return "ncbf-ts";
    case PolicyKind::lindb_ucb: return "lindb-ucb";
    case PolicyKind::lindb_ts: return "lindb-ts";
    case PolicyKind::lincbf_ucb: return "lincbf-ucb";
    case PolicyKind::lincbf_ts: return "lincbf-ts";
    case PolicyKind::random: return "random";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy(std::string_view token) {
  for (PolicyKind k : {PolicyKind::ndb_ucb, PolicyKind::ndb_ts, PolicyKind::ncbf_ucb,
                       PolicyKind::ncbf_ts, PolicyKind::lindb_ucb, PolicyKind::lindb_ts,
                       PolicyKind::lincbf_ucb, PolicyKind::lincbf_ts, PolicyKind::random}) {
    if (token == policy_name(k)) return k;
  }
  return std::nullopt;
}

// Per-arm diagnostics recorded by the duel rules: predicted reward, the
// uncertainty width against the first arm, and the TS sample when drawn.
struct ArmDiagnostics {
  double h = 0.0;
  double sigma = 0.0;
  double sampled = std::numeric_limits<double>::quiet_NaN();
};

struct DuelChoice {
  Eigen::Index first = 0;
  Eigen::Index second = 0;
  std::vector<ArmDiagnostics> scores;
};

struct SelectionConfig {
  double nu = 1.0;
  double lambda = 1.0;
  double kappa_mu = 1.0;
};

namespace detail {

inline Eigen::Index argmax_lowest(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline void check_selection_inputs(const Eigen::VectorXd& h, const PrecisionState& state,
                                   const Eigen::MatrixXd& g_features, Eigen::Index min_arms) {
  if (h.size() < min_arms) throw InputError("selection: not enough arms");
  if (g_features.cols() != h.size())
    throw InputError("selection: feature/value count mismatch");
  if (g_features.rows() != state.dim())
    throw InputError("selection: feature dimension mismatch");
}

// Widths sigma(x_i, x_ref) for all i via one product W = V_inv * G:
// u_i^T V_inv u_i = (g_i - g_ref) . (w_i - w_ref) by linearity.
inline Eigen::VectorXd pair_sigmas(const PrecisionState& state,
                                   const Eigen::MatrixXd& g, Eigen::Index ref,
                                   const SelectionConfig& cfg, const Eigen::MatrixXd& w) {
  const double s2 = state.feature_scale * state.feature_scale;
  const double factor = (cfg.lambda / cfg.kappa_mu) * s2;
  Eigen::VectorXd sigmas(g.cols());
  for (Eigen::Index i = 0; i < g.cols(); ++i) {
    if (i == ref) {
      sigmas[i] = 0.0;
      continue;
    }
    const double q = (g.col(i) - g.col(ref)).dot(w.col(i) - w.col(ref));
    sigmas[i] = std::sqrt(factor * guarded_quadratic_form(q));
  }
  return sigmas;
}

inline Eigen::VectorXd single_sigmas(const PrecisionState& state, const Eigen::MatrixXd& g,
                                     const SelectionConfig& cfg, const Eigen::MatrixXd& w) {
  const double s2 = state.feature_scale * state.feature_scale;
  const double factor = (cfg.lambda / cfg.kappa_mu) * s2;
  Eigen::VectorXd sigmas(g.cols());
  for (Eigen::Index i = 0; i < g.cols(); ++i)
    sigmas[i] = std::sqrt(factor * guarded_quadratic_form(g.col(i).dot(w.col(i))));
  return sigmas;
}

}  // namespace detail

// First arm greedily by h, second by maximizing h(x) + nu * sigma(x, first).
// Ties resolve to the lowest index; the self-pair width is exactly zero, so
// the first arm is re-selected only when no arm has an optimism advantage.
// g_features holds one (already anchor-evaluated, unscaled) gradient feature
// per column.
inline DuelChoice select_duel_ucb(const Eigen::VectorXd& h_values, const PrecisionState& state,
                                  const Eigen::MatrixXd& g_features, const SelectionConfig& cfg) {
  detail::check_selection_inputs(h_values, state, g_features, 2);
  DuelChoice choice;
  choice.first = detail::argmax_lowest(h_values);

  Eigen::MatrixXd w;
  w.noalias() = state.V_inv * g_features;
  const Eigen::VectorXd sigmas = detail::pair_sigmas(state, g_features, choice.first, cfg, w);
  choice.second = detail::argmax_lowest(h_values + cfg.nu * sigmas);

  choice.scores.resize(static_cast<std::size_t>(h_values.size()));
  for (Eigen::Index i = 0; i < h_values.size(); ++i)
    choice.scores[static_cast<std::size_t>(i)] = ArmDiagnostics{h_values[i], sigmas[i]};
  return choice;
}

// First arm greedily; for the second, each arm draws
// r(x) ~ N(h(x) - h(first), (nu * sigma(x, first))^2) and the argmax wins.
inline DuelChoice select_duel_ts(const Eigen::VectorXd& h_values, const PrecisionState& state,
                                 const Eigen::MatrixXd& g_features, const SelectionConfig& cfg,
                                 RandomStream& rng) {
  detail::check_selection_inputs(h_values, state, g_features, 2);
  DuelChoice choice;
  choice.first = detail::argmax_lowest(h_values);

  Eigen::MatrixXd w;
  w.noalias() = state.V_inv * g_features;
  const Eigen::VectorXd sigmas = detail::pair_sigmas(state, g_features, choice.first, cfg, w);

  Eigen::VectorXd sampled(h_values.size());
  for (Eigen::Index i = 0; i < h_values.size(); ++i)
    sampled[i] = (h_values[i] - h_values[choice.first]) + cfg.nu * sigmas[i] * rng.normal();
  choice.second = detail::argmax_lowest(sampled);

  choice.scores.resize(static_cast<std::size_t>(h_values.size()));
  for (Eigen::Index i = 0; i < h_values.size(); ++i)
    choice.scores[static_cast<std::size_t>(i)] = ArmDiagnostics{h_values[i], sigmas[i], sampled[i]};
  return choice;
}

// Single-arm optimistic rule: argmax h(x) + nu * sigma(x).
inline Eigen::Index select_arm_ucb(const Eigen::VectorXd& h_values, const PrecisionState& state,
                                   const Eigen::MatrixXd& g_features,
                                   const SelectionConfig& cfg) {
  detail::check_selection_inputs(h_values, state, g_features, 1);
  Eigen::MatrixXd w;
  w.noalias() = state.V_inv * g_features;
  const Eigen::VectorXd sigmas = detail::single_sigmas(state, g_features, cfg, w);
  return detail::argmax_lowest(h_values + cfg.nu * sigmas);
}

// Single-arm TS rule: r(x) ~ N(h(x), (nu * sigma(x))^2), argmax of the draws.
inline Eigen::Index select_arm_ts(const Eigen::VectorXd& h_values, const PrecisionState& state,
                                  const Eigen::MatrixXd& g_features, const SelectionConfig& cfg,
                                  RandomStream& rng) {
  detail::check_selection_inputs(h_values, state, g_features, 1);
  Eigen::MatrixXd w;
  w.noalias() = state.V_inv * g_features;
  const Eigen::VectorXd sigmas = detail::single_sigmas(state, g_features, cfg, w);
  Eigen::VectorXd sampled(h_values.size());
  for (Eigen::Index i = 0; i < h_values.size(); ++i)
    sampled[i] = h_values[i] + cfg.nu * sigmas[i] * rng.normal();
  return detail::argmax_lowest(sampled);
}

// Scores x_i . theta_hat for the linear baselines.
inline Eigen::VectorXd linear_scores(const Eigen::VectorXd& theta_hat,
                                     const Eigen::MatrixXd& contexts) {
  if (contexts.cols() != theta_hat.size())
    throw InputError("linear_scores: dimension mismatch");
  return contexts * theta_hat;
}

// Uniform control baseline; duels draw without replacement.
inline Eigen::Index select_random_arm(Eigen::Index K, RandomStream& rng) {
  if (K < 1) throw InputError("select_random_arm: need at least one arm");
  return static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(K)));
}

inline DuelChoice select_random_duel(Eigen::Index K, RandomStream& rng) {
  if (K < 2) throw InputError("select_random_duel: need at least two arms");
  DuelChoice choice;
  choice.first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(K)));
  const Eigen::Index offset =
      static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(K - 1)));
  choice.second = (choice.first + 1 + offset) % K;
  return choice;
}

}  // namespace ndb
