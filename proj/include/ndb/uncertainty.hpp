#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "ndb/errors.hpp"
#include "ndb/linalg.hpp"

namespace ndb {

// Quadratic forms this far below zero trigger the degeneracy path; anything
// in [-kDegeneracyFloor, 0] is clamped to 0.
inline constexpr double kDegeneracyFloor = 1e-12;

// V_t = ridge*I + sum_s u_s u_s^T with its maintained inverse. Updates are
// rank-1 Sherman-Morrison; rebuilds invert from scratch. One owner mutates;
// sigma queries are const and may run concurrently between updates.
//
// track_V keeps the explicit V in sync on every update; the experiment loop
// turns it off (V is only read by diagnostics and tests) and relies on
// rebuilds or the update log instead.
struct PrecisionState {
  Eigen::MatrixXd V;
  Eigen::MatrixXd V_inv;
  double ridge = 1.0;         // lambda / kappa_mu
  Eigen::Index count = 0;     // number of absorbed features
  double feature_scale = 1.0; // 1 (practical) or 1/sqrt(m) (theory)
  bool track_V = true;

  Eigen::Index dim() const { return V_inv.rows(); }
};

inline PrecisionState precision_init(Eigen::Index p, double lambda, double kappa_mu,
                                     double feature_scale = 1.0, bool track_V = true) {
  if (p < 1) throw ConfigError("precision_init: dimension must be >= 1");
  if (!(lambda > 0.0)) throw ConfigError("precision_init: lambda must be positive");
  if (!(kappa_mu > 0.0)) throw ConfigError("precision_init: kappa_mu must be positive");
  if (!(feature_scale > 0.0)) throw ConfigError("precision_init: feature_scale must be positive");
  PrecisionState state;
  state.ridge = lambda / kappa_mu;
  state.V = Eigen::MatrixXd::Identity(p, p) * state.ridge;
  state.V_inv = Eigen::MatrixXd::Identity(p, p) / state.ridge;
  state.count = 0;
  state.feature_scale = feature_scale;
  state.track_V = track_V;
  return state;
}

namespace detail {

inline void check_feature(const PrecisionState& state,
                          const Eigen::Ref<const Eigen::VectorXd>& u, const char* who) {
  if (u.size() != state.dim())
    throw InputError(std::string(who) + ": feature dimension mismatch");
  if (!u.allFinite()) throw InputError(std::string(who) + ": non-finite feature");
}

}  // namespace detail

// V += u u^T with the Sherman-Morrison correction of the inverse. The
// optional precomputed w = V_inv * u (from a batched query against the same
// pre-update state) skips the internal matrix-vector product.
inline void precision_update(PrecisionState& state, const Eigen::Ref<const Eigen::VectorXd>& u,
                             const Eigen::VectorXd* precomputed_vinv_u = nullptr) {
  detail::check_feature(state, u, "precision_update");
  if (u.isZero(0.0)) {
    ++state.count;
    return;
  }
  Eigen::VectorXd w;
  if (precomputed_vinv_u != nullptr) {
    w = *precomputed_vinv_u;
  } else {
    w.noalias() = state.V_inv * u;
  }
  const double denom = 1.0 + u.dot(w);
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw NumericalError("precision_update: degenerate Sherman-Morrison denominator");
  state.V_inv.noalias() -= (w / denom) * w.transpose();
  if (state.track_V) state.V.noalias() += u * u.transpose();
  ++state.count;
}

namespace detail {

// u^T V_inv u with the degeneracy policy: slightly negative values are
// rounding noise and clamp to zero; anything worse is reported so the owner
// can rebuild.
inline double guarded_quadratic_form(double q) {
  if (q >= 0.0) return q;
  if (q >= -kDegeneracyFloor) return 0.0;
  throw NumericalError("uncertainty: negative quadratic form, inverse degenerated");
}

inline double quadratic_form(const PrecisionState& state,
                             const Eigen::Ref<const Eigen::VectorXd>& u) {
  return guarded_quadratic_form(u.dot(state.V_inv * u));
}

}  // namespace detail

// sigma_{t-1}(x1, x2) = sqrt( (lambda/kappa) * | s*(g1 - g2) |^2_{V^-1} )
// with s the state's feature scale.
inline double sigma_pair(const PrecisionState& state,
                         const Eigen::Ref<const Eigen::VectorXd>& g1,
                         const Eigen::Ref<const Eigen::VectorXd>& g2,
                         double lambda, double kappa_mu) {
  detail::check_feature(state, g1, "sigma_pair");
  detail::check_feature(state, g2, "sigma_pair");
  const Eigen::VectorXd u = (g1 - g2) * state.feature_scale;
  return std::sqrt((lambda / kappa_mu) * detail::quadratic_form(state, u));
}

inline double sigma_single(const PrecisionState& state,
                           const Eigen::Ref<const Eigen::VectorXd>& g,
                           double lambda, double kappa_mu) {
  detail::check_feature(state, g, "sigma_single");
  const Eigen::VectorXd u = g * state.feature_scale;
  return std::sqrt((lambda / kappa_mu) * detail::quadratic_form(state, u));
}

struct RebuildInfo {
  // log det(V / ridge), i.e. the information-gain log-determinant ratio.
  double log_det_ratio = 0.0;
};

// Rebuilds the state from scratch out of (already scaled) feature columns.
// Inverts via Woodbury through the n x n capacitance matrix while n < p,
// otherwise by dense SPD inversion; both are exact.
inline PrecisionState precision_rebuild(const Eigen::MatrixXd& features, double lambda,
                                        double kappa_mu, double feature_scale = 1.0,
                                        bool track_V = true, RebuildInfo* info = nullptr) {
  const Eigen::Index p = features.rows();
  const Eigen::Index n = features.cols();
  if (!features.allFinite()) throw InputError("precision_rebuild: non-finite features");
  PrecisionState state = precision_init(p, lambda, kappa_mu, feature_scale, track_V);
  if (n == 0) {
    if (info != nullptr) info->log_det_ratio = 0.0;
    return state;
  }
  const double r = state.ridge;

  if (state.track_V) linalg::add_outer_products(state.V, features);

  if (n < (3 * p) / 4) {
    // V^-1 = (1/r) I - (1/r^2) F (r I_n + F^T F)^-1 F^T
    Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(n, n) * r;
    cap.selfadjointView<Eigen::Lower>().rankUpdate(features.transpose());
    linalg::mirror_lower_to_upper(cap);
    double cap_logdet = 0.0;
    try {
      cap_logdet = linalg::spd_inverse_in_place(cap);
    } catch (const NumericalError&) {
      throw NumericalError("precision_rebuild: capacitance inversion failed");
    }
    Eigen::MatrixXd b(p, n);
    b.noalias() = features * cap;
    state.V_inv.noalias() -= (b / (r * r)) * features.transpose();
    // Symmetrize away the GEMM rounding skew.
    state.V_inv = 0.5 * (state.V_inv + state.V_inv.transpose()).eval();
    if (info != nullptr) info->log_det_ratio = cap_logdet - n * std::log(r);
  } else {
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(p, p) * r;
    linalg::add_outer_products(v, features);
    double logdet = 0.0;
    try {
      Eigen::MatrixXd inv = v;
      logdet = linalg::spd_inverse_in_place(inv);
      state.V_inv = std::move(inv);
    } catch (const NumericalError&) {
      throw NumericalError("precision_rebuild: dense inversion failed");
    }
    if (info != nullptr) info->log_det_ratio = logdet - p * std::log(r);
  }

  if (!state.V_inv.allFinite()) throw NumericalError("precision_rebuild: non-finite inverse");
  state.count = n;
  return state;
}

inline PrecisionState precision_rebuild(const std::vector<Eigen::VectorXd>& features,
                                        Eigen::Index p, double lambda, double kappa_mu,
                                        double feature_scale = 1.0, bool track_V = true,
                                        RebuildInfo* info = nullptr) {
  Eigen::MatrixXd f(p, static_cast<Eigen::Index>(features.size()));
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    const auto& u = features[static_cast<std::size_t>(j)];
    if (u.size() != p) throw InputError("precision_rebuild: feature dimension mismatch");
    f.col(j) = u;
  }
  return precision_rebuild(f, lambda, kappa_mu, feature_scale, track_V, info);
}

// Effective dimension: log det( I + (kappa/lambda) sum_u u u^T ) over all
// (already scaled) feature vectors in the groups. Computed through the
// Gram-matrix identity det(I_p + c F F^T) = det(I_n + c F^T F).
inline double effective_dimension(const std::vector<std::vector<Eigen::VectorXd>>& feature_groups,
                                  double lambda, double kappa_mu) {
  if (!(lambda > 0.0) || !(kappa_mu > 0.0))
    throw ConfigError("effective_dimension: scalars must be positive");
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  for (const auto& group : feature_groups)
    for (const auto& u : group) {
      if (p == 0) p = u.size();
      if (u.size() != p) throw InputError("effective_dimension: inconsistent dimensions");
      ++n;
    }
  if (n == 0) return 0.0;

  Eigen::MatrixXd f(p, n);
  Eigen::Index j = 0;
  for (const auto& group : feature_groups)
    for (const auto& u : group) f.col(j++) = u;
  if (!f.allFinite()) throw InputError("effective_dimension: non-finite features");

  const double c = kappa_mu / lambda;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose(), c);
  linalg::mirror_lower_to_upper(gram);
  const double logdet = linalg::spd_log_det(gram);
  if (!std::isfinite(logdet)) throw NumericalError("effective_dimension: non-finite log-det");
  return logdet;
}

enum class NuMode { fixed, theoretical };

// Exploration-scale configuration. Fixed mode returns nu as-is; the
// theoretical mode assembles nu_T from the effective dimension.
struct ConfidenceConfig {
  NuMode mode = NuMode::fixed;
  double nu = 1.0;
  double B = 1.0;
  double delta = 0.05;
  double lambda = 1.0;
  double kappa_mu = 1.0;
};

// beta_T = (1/kappa) sqrt(d_tilde + 2 log(1/delta));
// nu_T = (beta_T + B sqrt(lambda/kappa) + 1) sqrt(kappa/lambda).
inline double theoretical_nu(const ConfidenceConfig& cfg, double d_tilde) {
  if (cfg.mode == NuMode::fixed) return cfg.nu;
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw ConfigError("theoretical_nu: delta must lie in (0,1)");
  if (d_tilde < 0.0) throw InputError("theoretical_nu: d_tilde must be >= 0");
  if (!(cfg.lambda > 0.0) || !(cfg.kappa_mu > 0.0))
    throw ConfigError("theoretical_nu: scalars must be positive");
  const double beta =
      (1.0 / cfg.kappa_mu) * std::sqrt(d_tilde + 2.0 * std::log(1.0 / cfg.delta));
  return (beta + cfg.B * std::sqrt(cfg.lambda / cfg.kappa_mu) + 1.0) *
         std::sqrt(cfg.kappa_mu / cfg.lambda);
}

}  // namespace ndb
