#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "lrmdl/types.hpp"

namespace lrmdl {

/// Rank-k factorization M = U * diag(sigma) * V^T. Produced by reduced_svd
/// with orthonormal columns and strictly positive non-increasing sigma;
/// quantized copies of these factors (see selection.hpp) keep the layout but
/// satisfy orthonormality only up to the quantization step.
struct ReducedSVD {
  Matrix U;      // m x k
  Vector sigma;  // k, positive, non-increasing
  Matrix V;      // n x k

  int rank() const { return static_cast<int>(sigma.size()); }
};

inline Matrix reconstruct(const ReducedSVD& f) {
  if (f.rank() == 0) return Matrix::Zero(f.U.rows(), f.V.rows());
  return f.U * f.sigma.asDiagonal() * f.V.transpose();
}

/// Thin SVD of M with singular values <= rank_tol * sigma_max discarded.
/// Sign convention: the largest-magnitude entry of each U column is positive
/// (first index wins ties), with the matching V column negated alongside, so
/// the factorization is unique and runs are reproducible.
inline ReducedSVD reduced_svd(const Matrix& M, double rank_tol = 1e-12) {
  if (M.rows() < 1 || M.cols() < 1) throw invalid_input_error("reduced_svd: empty matrix");
  if (!M.allFinite()) throw invalid_input_error("reduced_svd: non-finite entries");
  if (!(rank_tol >= 0.0) || !std::isfinite(rank_tol))
    throw invalid_input_error("reduced_svd: rank_tol must be a non-negative real");

  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  if (sigma_max <= 0.0) throw empty_rank_error("reduced_svd: matrix has no numerical rank");

  const double cut = rank_tol * sigma_max;
  int k = 0;
  while (k < sv.size() && sv(k) > cut) ++k;
  if (k == 0) throw empty_rank_error("reduced_svd: matrix has no numerical rank");

  ReducedSVD f{svd.matrixU().leftCols(k), sv.head(k), svd.matrixV().leftCols(k)};
  for (int j = 0; j < k; ++j) {
    Eigen::Index imax = 0;
    f.U.col(j).cwiseAbs().maxCoeff(&imax);
    if (f.U(imax, j) < 0.0) {
      f.U.col(j) = -f.U.col(j);
      f.V.col(j) = -f.V.col(j);
    }
  }
  return f;
}

/// Scalar shrinkage toward zero: sign(v) * max(|v| - tau, 0).
inline double soft_threshold(double v, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw invalid_input_error("soft_threshold: tau must be a non-negative real");
  const double mag = std::fabs(v) - tau;
  return mag > 0.0 ? std::copysign(mag, v) : 0.0;
}

/// Elementwise shrinkage.
inline Matrix soft_threshold(const Matrix& M, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw invalid_input_error("soft_threshold: tau must be a non-negative real");
  return M.unaryExpr([tau](double v) {
    const double mag = std::fabs(v) - tau;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

/// Proximal operator of tau * nuclear norm: shrinks every singular value of
/// M by tau and drops the ones that do not stay strictly positive.
inline Matrix singular_value_threshold(const Matrix& M, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw invalid_input_error("singular_value_threshold: tau must be a non-negative real");
  if (!M.allFinite()) throw invalid_input_error("singular_value_threshold: non-finite entries");

  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  int k = 0;
  while (k < sv.size() && sv(k) - tau > 0.0) ++k;
  if (k == 0) return Matrix::Zero(M.rows(), M.cols());
  return svd.matrixU().leftCols(k) * (sv.head(k).array() - tau).matrix().asDiagonal() *
         svd.matrixV().leftCols(k).transpose();
}

}  // namespace lrmdl
