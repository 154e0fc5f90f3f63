#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ndb/errors.hpp"

#ifdef NDB_HAVE_LAPACKE
#include <cblas.h>
#include <lapacke.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace ndb::linalg {

// Repetitions run in parallel at a higher level, so BLAS stays single
// threaded. Safe to call more than once.
inline void use_single_threaded_blas() {
#ifdef NDB_HAVE_LAPACKE
  static const bool done = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)done;
#endif
}

inline void mirror_lower_to_upper(Eigen::MatrixXd& a) {
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
}

// In-place inverse of a symmetric positive-definite matrix.
// Returns the log-determinant of the original matrix.
inline double spd_inverse_in_place(Eigen::MatrixXd& a) {
  const Eigen::Index p = a.rows();
#ifdef NDB_HAVE_LAPACKE
  use_single_threaded_blas();
  const lapack_int n = static_cast<lapack_int>(p);
  lapack_int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, a.data(), n);
  if (info != 0) throw NumericalError("spd_inverse: dpotrf failed");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) logdet += 2.0 * std::log(a(i, i));
  info = LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', n, a.data(), n);
  if (info != 0) throw NumericalError("spd_inverse: dpotri failed");
  mirror_lower_to_upper(a);
  return logdet;
#else
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("spd_inverse: LLT failed");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  a = llt.solve(Eigen::MatrixXd::Identity(p, p));
  return logdet;
#endif
}

// a += scale * f * f^T for all columns f of features (symmetric rank-k).
inline void add_outer_products(Eigen::MatrixXd& a, const Eigen::MatrixXd& features,
                               double scale = 1.0) {
  if (features.cols() == 0) return;
#ifdef NDB_HAVE_LAPACKE
  use_single_threaded_blas();
  cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans,
              static_cast<int>(a.rows()), static_cast<int>(features.cols()),
              scale, features.data(), static_cast<int>(features.rows()), 1.0,
              a.data(), static_cast<int>(a.rows()));
  mirror_lower_to_upper(a);
#else
  a.selfadjointView<Eigen::Lower>().rankUpdate(features, scale);
  mirror_lower_to_upper(a);
#endif
}

// Log-determinant of a symmetric positive-definite matrix.
inline double spd_log_det(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("spd_log_det: LLT failed");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  return logdet;
}

}  // namespace ndb::linalg
