#pragma once

#include <Eigen/Core>
#include <cmath>
#include <utility>

#include "ndb/errors.hpp"
#include "ndb/link.hpp"
#include "ndb/rng.hpp"

namespace ndb {

// Latent reward families used by the synthetic environments:
//   square:        f(x) = scale * (x . theta)^2
//   cosine_inner:  f(x) = cos(scale * x . theta)
//   cosine_outer:  f(x) = scale * cos(x . theta)
enum class RewardKind { square, cosine_inner, cosine_outer };

struct SyntheticReward {
  RewardKind kind = RewardKind::square;
  double scale = 10.0;
  Eigen::VectorXd theta_star;

  Eigen::Index dim() const { return theta_star.size(); }
};

inline SyntheticReward make_reward(RewardKind kind, double scale,
                                   Eigen::Index d, RandomStream& rng) {
  if (d < 1) throw ConfigError("make_reward: dimension must be >= 1");
  Eigen::VectorXd theta(d);
  for (Eigen::Index i = 0; i < d; ++i) theta[i] = rng.uniform(-1.0, 1.0);
  return SyntheticReward{kind, scale, std::move(theta)};
}

inline double eval_reward(const SyntheticReward& f, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != f.dim()) throw InputError("eval_reward: dimension mismatch");
  const double z = f.theta_star.dot(x);
  switch (f.kind) {
    case RewardKind::square:
      return f.scale * z * z;
    case RewardKind::cosine_inner:
      return std::cos(f.scale * z);
    case RewardKind::cosine_outer:
      return f.scale * std::cos(z);
  }
  throw InputError("eval_reward: unknown reward kind");
}

// The K context-arm feature vectors offered in one round, one per row.
struct RoundContexts {
  int round = 0;
  Eigen::MatrixXd features;  // K x d

  Eigen::Index arms() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

// raw: entries i.i.d. uniform(-1,1), as in the experiments.
// theory: each raw vector x is mapped to (x,x)/(sqrt(2)|x|), which has unit
// norm and duplicated halves; the returned features have 2*d columns.
enum class ContextMode { raw, theory };

inline RoundContexts make_round_contexts(RandomStream& rng, int K, int d,
                                         ContextMode mode, int round = 0) {
  if (K < 2) throw ConfigError("make_round_contexts: need at least two arms");
  if (d < 1) throw ConfigError("make_round_contexts: dimension must be >= 1");
  Eigen::MatrixXd raw(K, d);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < d; ++j) raw(i, j) = rng.uniform(-1.0, 1.0);
  if (mode == ContextMode::raw) return RoundContexts{round, std::move(raw)};

  Eigen::MatrixXd out(K, 2 * d);
  for (int i = 0; i < K; ++i) {
    const double norm = raw.row(i).norm();
    if (norm == 0.0) throw NumericalError("make_round_contexts: zero raw vector");
    const Eigen::RowVectorXd scaled = raw.row(i) / (std::sqrt(2.0) * norm);
    out.row(i) << scaled, scaled;
  }
  return RoundContexts{round, std::move(out)};
}

// One duel feedback record; y = 1 means x1 was preferred over x2.
struct PreferenceObservation {
  Eigen::VectorXd x1;
  Eigen::VectorXd x2;
  int y = 0;
  int round = 0;
};

// One single-arm binary feedback record.
struct BinaryObservation {
  Eigen::VectorXd x;
  int y = 0;
  int round = 0;
};

inline PreferenceObservation sample_preference(const SyntheticReward& f,
                                               const LinkFunction& mu,
                                               const Eigen::VectorXd& x1,
                                               const Eigen::VectorXd& x2,
                                               RandomStream& rng, int round = 0) {
  const double p = mu.value(eval_reward(f, x1) - eval_reward(f, x2));
  const int y = rng.uniform01() < p ? 1 : 0;
  return PreferenceObservation{x1, x2, y, round};
}

inline BinaryObservation sample_binary(const SyntheticReward& f,
                                       const LinkFunction& mu,
                                       const Eigen::VectorXd& x,
                                       RandomStream& rng, int round = 0) {
  const double p = mu.value(eval_reward(f, x));
  const int y = rng.uniform01() < p ? 1 : 0;
  return BinaryObservation{x, y, round};
}

// Index and value of the reward-maximizing row; ties go to the lowest index.
inline std::pair<Eigen::Index, double> best_arm(const SyntheticReward& f,
                                                const RoundContexts& contexts) {
  if (contexts.arms() == 0) throw InputError("best_arm: empty contexts");
  Eigen::Index best = 0;
  double best_value = eval_reward(f, contexts.features.row(0).transpose());
  for (Eigen::Index i = 1; i < contexts.arms(); ++i) {
    const double v = eval_reward(f, contexts.features.row(i).transpose());
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return {best, best_value};
}

}  // namespace ndb
