#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrmdl/linalg.hpp"
#include "lrmdl/special_functions.hpp"
#include "lrmdl/types.hpp"

// Ideal Shannon codelengths, in bits, for every component of a quantized
// low-rank + sparse description. All costs are fractional bits of a lossless
// two-part code; no bitstream is emitted.

namespace lrmdl {

/// Ideal codelength in bits; always finite and >= 0.
struct CodeLength {
  double bits = 0.0;
};

/// Quantization step sizes for the four description components. delta_sigma
/// stays at 1e-16; the factor and error grids are tuned by the selection
/// pipeline.
struct QuantizationGrid {
  double delta_sigma = 1e-16;
  double delta_u = 0.0;
  double delta_v = 0.0;
  double delta_e = 0.0;
};

inline void validate(const QuantizationGrid& grid) {
  const double deltas[] = {grid.delta_sigma, grid.delta_u, grid.delta_v, grid.delta_e};
  for (double d : deltas)
    if (!(d > 0.0) || !std::isfinite(d))
      throw invalid_input_error("quantization grid: deltas must be positive reals");
}

/// Fitted scale of a discretized Laplacian residual model plus the cost of
/// describing it (half a bit per factor-of-e of sample count).
struct LaplacianTwoPartModel {
  double theta_hat = 0.0;
  double param_bits = 0.0;
};

/// Per-component bit split of one candidate description.
struct BitAllocation {
  CodeLength l_u;
  CodeLength l_sigma;
  CodeLength l_v;
  CodeLength l_e;
  CodeLength total;
};

/// Codelength of a positive integer under the universal prior for the
/// integers: iterated log2 summed while positive, plus log2(2.865) so the
/// implied probabilities satisfy Kraft's inequality. j is passed as a double
/// because quantized singular values produce indices beyond 2^63.
inline CodeLength universal_int_codelength(double j) {
  if (!(j >= 1.0) || !std::isfinite(j))
    throw domain_error("universal_int_codelength: j must be an integer >= 1");
  if (j != std::floor(j))
    throw domain_error("universal_int_codelength: j must be integer-valued");
  double bits = std::log2(2.865);
  for (double term = std::log2(j); term > 0.0; term = std::log2(term)) bits += term;
  return CodeLength{bits};
}

/// Codelength of a positive non-increasing singular value sequence: each
/// value is rounded to the delta_sigma grid and its index coded with the
/// universal integer prior. Values rounding to index 0 are not representable.
inline CodeLength sigma_codelength(const Vector& sigma, double delta_sigma = 1e-16) {
  if (!(delta_sigma > 0.0) || !std::isfinite(delta_sigma))
    throw invalid_input_error("sigma_codelength: delta_sigma must be a positive real");
  double bits = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma(i) > 0.0) || !std::isfinite(sigma(i)))
      throw invalid_input_error("sigma_codelength: singular values must be positive reals");
    if (i > 0 && sigma(i) > sigma(i - 1))
      throw invalid_input_error("sigma_codelength: sequence must be non-increasing");
    const double j = std::round(sigma(i) / delta_sigma);
    if (j < 1.0)
      throw underflow_error("sigma_codelength: singular value below representable precision");
    bits += universal_int_codelength(j).bits;
  }
  return CodeLength{bits};
}

/// P(U1 <= u) for the first coordinate of a uniform point on the unit sphere
/// of R^m: half the regularized incomplete beta of the cap, reflected for
/// u > 0 since complementary caps tile the sphere.
inline double spherical_cap_cdf(double u, int m) {
  if (m < 2) throw domain_error("spherical_cap_cdf: dimension must be at least 2");
  if (!(u >= -1.0 && u <= 1.0)) throw domain_error("spherical_cap_cdf: u must lie in [-1, 1]");
  if (u > 0.0) return 1.0 - spherical_cap_cdf(-u, m);
  const double x = (1.0 - u) * (1.0 + u);  // 1 - u^2 without cancellation near |u| = 1
  return 0.5 * reg_inc_beta(x, 0.5 * (m - 1), 0.5);
}

namespace detail {

// Probability that the first coordinate lands in [lo, hi] (subset of [-1, 1]).
// Evaluated per half-plane through the incomplete-beta tails so bins near the
// poles keep relative accuracy instead of cancelling against 1.
inline double cap_mass(double lo, double hi, int m) {
  const double a = 0.5 * (m - 1);
  const auto tail = [&](double u) {  // P(|U1| >= |u|) on one side
    return 0.5 * reg_inc_beta((1.0 - u) * (1.0 + u), a, 0.5);
  };
  const auto center = [&](double u) {  // P(0 <= U1 <= u), u >= 0
    return 0.5 * reg_inc_beta(u * u, 0.5, a);
  };
  if (lo >= hi) return 0.0;
  if (lo >= 0.0) return tail(lo) - tail(hi);
  if (hi <= 0.0) return tail(-hi) - tail(-lo);
  return center(-lo) + center(hi);
}

}  // namespace detail

/// Codelength of a unit vector coded coordinate by coordinate: each value is
/// quantized to the delta grid, charged -log2 of the mass its bin carries
/// under the uniform-on-sphere marginal at the current dimension, and the
/// sphere then shrinks to the geometric residual radius sqrt(r^2 - u_hat^2).
/// The final coordinate is a sign on a 0-sphere and always costs one bit.
inline CodeLength sphere_vector_codelength(const Vector& u, double delta) {
  const Eigen::Index d = u.size();
  if (d < 1) throw invalid_input_error("sphere_vector_codelength: empty vector");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw invalid_input_error("sphere_vector_codelength: delta must be a positive real");
  if (std::fabs(u.norm() - 1.0) > 1e-8)
    throw invalid_input_error("sphere_vector_codelength: input must have unit norm");

  double bits = 0.0;
  double r = 1.0;
  for (Eigen::Index t = 0; t + 1 < d; ++t) {
    const int m = static_cast<int>(d - t);
    // Bin indices representable inside [-r, r]; the guard keeps a boundary
    // radius from rounding an extra bin into existence.
    const double kmax = std::floor(r / delta + 0.5 - 1e-12);
    if (kmax < 1.0) continue;  // single bin spans the whole sphere: zero bits
    const double k = std::clamp(std::round(u(t) / delta), -kmax, kmax);
    const double uq = k * delta;
    const double lo = std::clamp((uq - 0.5 * delta) / r, -1.0, 1.0);
    const double hi = std::clamp((uq + 0.5 * delta) / r, -1.0, 1.0);
    const double mass = std::max(detail::cap_mass(lo, hi, m), 1e-300);
    bits += std::max(0.0, -std::log2(mass));
    r = std::sqrt(std::max(r * r - uq * uq, 0.0));
  }
  return CodeLength{bits + 1.0};
}

/// Coordinates of u in a deterministic orthonormal basis of the orthogonal
/// complement of prev_cols: the trailing Householder-Q columns of prev_cols'
/// QR, each flipped so its largest-magnitude entry is positive (first index
/// wins ties, same convention as reduced_svd). u must be a unit vector
/// already orthogonal to every previous column.
inline Vector orthocomplement_coordinates(const Matrix& prev_cols, const Vector& u) {
  const Eigen::Index m = u.size();
  const Eigen::Index t = prev_cols.cols();
  if (prev_cols.rows() != m && t > 0)
    throw invalid_input_error("orthocomplement_coordinates: dimension mismatch");
  if (t >= m) throw invalid_input_error("orthocomplement_coordinates: complement is empty");
  if (std::fabs(u.norm() - 1.0) > 1e-8)
    throw invalid_input_error("orthocomplement_coordinates: u must have unit norm");
  if (t == 0) return u;
  if ((prev_cols.transpose() * prev_cols - Matrix::Identity(t, t)).cwiseAbs().maxCoeff() > 1e-6)
    throw invalid_input_error("orthocomplement_coordinates: previous columns not orthonormal");
  if ((prev_cols.transpose() * u).cwiseAbs().maxCoeff() > 1e-6)
    throw invalid_input_error("orthocomplement_coordinates: u not orthogonal to previous columns");

  Matrix Q = Eigen::HouseholderQR<Matrix>(prev_cols).householderQ() * Matrix::Identity(m, m);
  Matrix B = Q.rightCols(m - t);
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    Eigen::Index imax = 0;
    B.col(j).cwiseAbs().maxCoeff(&imax);
    if (B(imax, j) < 0.0) B.col(j) = -B.col(j);
  }
  return B.transpose() * u;
}

/// Residuals of the causal bilinear predictor left + up - diag over a raster
/// image, with out-of-range pixels read as zero. Invertible in raster order.
inline Matrix bilinear_residuals(const Matrix& B) {
  if (!B.allFinite()) throw invalid_input_error("bilinear_residuals: non-finite entries");
  Matrix R(B.rows(), B.cols());
  for (Eigen::Index j = 0; j < B.rows(); ++j)
    for (Eigen::Index l = 0; l < B.cols(); ++l) {
      const double left = l > 0 ? B(j, l - 1) : 0.0;
      const double up = j > 0 ? B(j - 1, l) : 0.0;
      const double diag = j > 0 && l > 0 ? B(j - 1, l - 1) : 0.0;
      R(j, l) = B(j, l) - (left + up - diag);
    }
  return R;
}

/// Exact inverse of bilinear_residuals.
inline Matrix bilinear_reconstruct(const Matrix& R) {
  if (!R.allFinite()) throw invalid_input_error("bilinear_reconstruct: non-finite entries");
  Matrix B(R.rows(), R.cols());
  for (Eigen::Index j = 0; j < R.rows(); ++j)
    for (Eigen::Index l = 0; l < R.cols(); ++l) {
      const double left = l > 0 ? B(j, l - 1) : 0.0;
      const double up = j > 0 ? B(j - 1, l) : 0.0;
      const double diag = j > 0 && l > 0 ? B(j - 1, l - 1) : 0.0;
      B(j, l) = R(j, l) + left + up - diag;
    }
  return B;
}

/// First-order causal differences; the first value passes through. Inverse is
/// the prefix sum.
inline Vector first_diff_residuals(const Vector& v) {
  if (v.size() < 1) throw invalid_input_error("first_diff_residuals: empty sequence");
  Vector r(v.size());
  r(0) = v(0);
  for (Eigen::Index j = 1; j < v.size(); ++j) r(j) = v(j) - v(j - 1);
  return r;
}

/// Exact inverse of first_diff_residuals.
inline Vector first_diff_reconstruct(const Vector& r) {
  if (r.size() < 1) throw invalid_input_error("first_diff_reconstruct: empty sequence");
  Vector v(r.size());
  v(0) = r(0);
  for (Eigen::Index j = 1; j < r.size(); ++j) v(j) = r(j) + v(j - 1);
  return v;
}

namespace detail {

// log2 sinh(y) for y > 0 without overflow: sinh(y) = e^y (1 - e^{-2y}) / 2.
inline double log2_sinh(double y) {
  return y * M_LOG2E + std::log2(-std::expm1(-2.0 * y)) - 1.0;
}

// Bits of the width-delta bin centered at k*delta under Laplacian(theta).
// Central bin mass is 1 - e^{-delta/2theta}; an off-center bin at c = |k|delta
// has mass e^{-c/theta} sinh(delta/2theta). Both evaluated in the log domain.
inline double laplacian_bin_bits(double k, double delta, double theta) {
  const double y = 0.5 * delta / theta;
  if (k == 0.0) return -std::log2(-std::expm1(-y));
  return std::fabs(k) * delta / theta * M_LOG2E - log2_sinh(y);
}

}  // namespace detail

/// Two-part codelength of a residual sequence under a discretized Laplacian:
/// the ML scale (mean magnitude) costs half a log2 of the sample count, and
/// each residual costs -log2 of its quantization bin's exact mass. All-zero
/// residuals degenerate to a point mass on the zero bin and cost only the
/// parameter.
inline std::pair<CodeLength, LaplacianTwoPartModel> laplacian_two_part_codelength(
    const Vector& residuals, double delta) {
  const Eigen::Index n = residuals.size();
  if (n < 1) throw invalid_input_error("laplacian_two_part_codelength: empty sequence");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw invalid_input_error("laplacian_two_part_codelength: delta must be a positive real");
  if (!residuals.allFinite())
    throw invalid_input_error("laplacian_two_part_codelength: non-finite entries");

  LaplacianTwoPartModel model;
  model.theta_hat = residuals.cwiseAbs().mean();
  model.param_bits = 0.5 * std::log2(static_cast<double>(n));
  double bits = model.param_bits;
  if (model.theta_hat > 0.0)
    for (Eigen::Index i = 0; i < n; ++i)
      bits += detail::laplacian_bin_bits(std::round(residuals(i) / delta), delta, model.theta_hat);
  return {CodeLength{bits}, model};
}

/// Codelength of a size-k subset of n positions: k uniform over {0..n}, then
/// the subset index among the C(n,k) possibilities, in log space.
inline CodeLength enumerative_codelength(long n, long k) {
  if (n < 1) throw domain_error("enumerative_codelength: n must be positive");
  if (k < 0 || k > n) throw domain_error("enumerative_codelength: k must lie in [0, n]");
  const double log2_binom =
      (log_gamma(static_cast<double>(n) + 1.0) - log_gamma(static_cast<double>(k) + 1.0) -
       log_gamma(static_cast<double>(n - k) + 1.0)) *
      M_LOG2E;
  return CodeLength{std::log2(static_cast<double>(n) + 1.0) + std::max(0.0, log2_binom)};
}

/// Codelength of a sparse error matrix, row by row: entries quantize to the
/// delta_e grid, each row pays an enumerative code for its nonzero support
/// and a per-row Laplacian two-part code for the nonzero values (scales vary
/// too much across rows to share one parameter).
inline CodeLength sparse_error_codelength(const Matrix& E, double delta_e) {
  if (E.rows() < 1 || E.cols() < 1)
    throw invalid_input_error("sparse_error_codelength: empty matrix");
  if (!E.allFinite()) throw invalid_input_error("sparse_error_codelength: non-finite entries");
  if (!(delta_e > 0.0) || !std::isfinite(delta_e))
    throw invalid_input_error("sparse_error_codelength: delta_e must be a positive real");

  const long n = static_cast<long>(E.cols());
  double bits = 0.0;
  std::vector<double> values;
  for (Eigen::Index i = 0; i < E.rows(); ++i) {
    values.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double k = std::round(E(i, j) / delta_e);
      if (k != 0.0) values.push_back(k * delta_e);
    }
    bits += enumerative_codelength(n, static_cast<long>(values.size())).bits;
    if (!values.empty()) {
      const Vector row = Eigen::Map<const Vector>(values.data(), values.size());
      bits += laplacian_two_part_codelength(row, delta_e).first.bits;
    }
  }
  return CodeLength{bits};
}

/// Left-factor coding route: columns as points on nested unit spheres, or as
/// raster images under the bilinear predictor.
enum class UCoderMode { spherical, predictive };

namespace detail {

// Deterministic two-pass modified Gram-Schmidt. Quantized factor columns are
// orthonormal only to O(delta_u); the sphere recursion needs exact mutual
// orthogonality, so the codelength is taken over the re-orthonormalized
// frame.
inline Matrix orthonormalized_columns(const Matrix& U) {
  Matrix W = U;
  for (Eigen::Index i = 0; i < W.cols(); ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index p = 0; p < i; ++p) W.col(i) -= W.col(p).dot(W.col(i)) * W.col(p);
    const double norm = W.col(i).norm();
    if (!(norm > 1e-12))
      throw invalid_input_error("matrix_U_codelength: columns are linearly dependent");
    W.col(i) /= norm;
  }
  return W;
}

}  // namespace detail

/// Codelength of the left factor. Spherical: column i is coded on the unit
/// sphere of the orthogonal complement of columns 1..i-1. Predictive: each
/// column is rastered to a frame-shaped image (row-major) and its bilinear
/// prediction residuals get a Laplacian two-part code.
inline CodeLength matrix_U_codelength(const Matrix& U, std::optional<FrameShape> frame_shape,
                                      const QuantizationGrid& grid, UCoderMode mode) {
  validate(grid);
  if (U.cols() == 0) return CodeLength{0.0};
  if (U.rows() < 1) throw invalid_input_error("matrix_U_codelength: empty columns");
  if (!U.allFinite()) throw invalid_input_error("matrix_U_codelength: non-finite entries");

  double bits = 0.0;
  if (mode == UCoderMode::predictive) {
    if (!frame_shape)
      throw invalid_input_error("matrix_U_codelength: predictive mode requires a frame shape");
    const Eigen::Index h = frame_shape->height, w = frame_shape->width;
    if (h * w != U.rows())
      throw invalid_input_error("matrix_U_codelength: frame shape does not match column length");
    for (Eigen::Index i = 0; i < U.cols(); ++i) {
      Matrix image(h, w);
      for (Eigen::Index j = 0; j < h; ++j)
        for (Eigen::Index l = 0; l < w; ++l) image(j, l) = U(j * w + l, i);
      const Matrix residuals = bilinear_residuals(image);
      const Vector flat = Eigen::Map<const Vector>(residuals.data(), residuals.size());
      bits += laplacian_two_part_codelength(flat, grid.delta_u).first.bits;
    }
  } else {
    const Matrix W = detail::orthonormalized_columns(U);
    for (Eigen::Index i = 0; i < W.cols(); ++i) {
      const Vector coords = orthocomplement_coordinates(W.leftCols(i), W.col(i));
      bits += sphere_vector_codelength(coords, grid.delta_u).bits;
    }
  }
  return CodeLength{bits};
}

/// Codelength of the right factor: per column, first differences (time
/// courses are smooth) under a Laplacian two-part code.
inline CodeLength matrix_V_codelength(const Matrix& V, const QuantizationGrid& grid) {
  validate(grid);
  if (V.cols() == 0) return CodeLength{0.0};
  if (V.rows() < 1) throw invalid_input_error("matrix_V_codelength: empty columns");
  if (!V.allFinite()) throw invalid_input_error("matrix_V_codelength: non-finite entries");
  double bits = 0.0;
  for (Eigen::Index i = 0; i < V.cols(); ++i)
    bits += laplacian_two_part_codelength(first_diff_residuals(V.col(i)), grid.delta_v).first.bits;
  return CodeLength{bits};
}

/// Total description length of X as quantized factors plus sparse error. The
/// decoder snaps the factor reconstruction to the delta_e grid and adds E, so
/// that sum must reproduce X to within half a grid step (exactly, when X is
/// itself on the grid).
inline BitAllocation total_codelength(const DataMatrix& X, const ReducedSVD& A_quantized,
                                      const Matrix& E, const QuantizationGrid& grid,
                                      UCoderMode u_mode) {
  validate(X);
  validate(grid);
  if (E.rows() != X.values.rows() || E.cols() != X.values.cols())
    throw invalid_input_error("total_codelength: E dimensions do not match X");

  const Matrix recon = reconstruct(A_quantized);
  if (recon.rows() != X.values.rows() || recon.cols() != X.values.cols())
    throw invalid_input_error("total_codelength: factor dimensions do not match X");
  const Matrix snapped = grid.delta_e * (recon / grid.delta_e).array().round().matrix();
  if (((X.values - snapped - E).cwiseAbs().maxCoeff()) > 0.5000001 * grid.delta_e)
    throw consistency_error("total_codelength: description does not reproduce the data");

  BitAllocation bits;
  if (A_quantized.rank() > 0) {
    bits.l_u = matrix_U_codelength(A_quantized.U, X.frame_shape, grid, u_mode);
    bits.l_sigma = sigma_codelength(A_quantized.sigma, grid.delta_sigma);
    bits.l_v = matrix_V_codelength(A_quantized.V, grid);
  }
  bits.l_e = sparse_error_codelength(E, grid.delta_e);
  bits.total = CodeLength{bits.l_u.bits + bits.l_sigma.bits + bits.l_v.bits + bits.l_e.bits};
  return bits;
}

}  // namespace lrmdl
