#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "lrmdl/coders.hpp"
#include "lrmdl/linalg.hpp"
#include "lrmdl/rpca.hpp"
#include "lrmdl/types.hpp"

// End-to-end model selection: sweep the regularization path, quantize each
// candidate losslessly, tune the factor grids by halving, score every
// description with total_codelength, and keep the shortest.

namespace lrmdl {

/// Quantized description of one candidate: factors on their grids plus the
/// error matrix that absorbs every quantization leftover.
struct QuantizedParts {
  ReducedSVD factors;
  Matrix E;
};

/// Result of the grid-halving search for one candidate.
struct RefinementResult {
  QuantizationGrid grid;
  BitAllocation allocation;
};

enum class CandidateKind { swept, rank_zero_reference, raw_reference };

/// One scored model. References use lambda = +infinity (rank-0: everything in
/// E) and lambda = 0 (raw: everything in A). A swept candidate whose solve
/// exhausted its budget keeps solved = false and carries no description.
struct ModelCandidate {
  CandidateKind kind = CandidateKind::swept;
  double lambda = 0.0;
  bool solved = false;
  int rank = 0;
  QuantizationGrid grid;
  BitAllocation allocation;
  ReducedSVD factors;
  Matrix E;
  SolveStats stats;
};

/// Sweep outcome: candidates in sweep order (references appended last) and
/// the index of the shortest description, ties broken toward smaller rank.
struct SelectionReport {
  std::vector<ModelCandidate> candidates;
  std::size_t best_index = 0;
  LambdaSchedule schedule;
  SolverConfig solver;
  UCoderMode u_mode = UCoderMode::spherical;
};

/// Starting grid: factor deltas at the standard deviation of a normalized
/// vector's entries; delta_e = 1 for integer data (making the description
/// exactly lossless) and 1e-6 of the data range otherwise.
inline QuantizationGrid default_grid(const DataMatrix& X) {
  validate(X);
  QuantizationGrid grid;
  grid.delta_u = std::sqrt(1.0 / static_cast<double>(X.values.rows()));
  grid.delta_v = std::sqrt(1.0 / static_cast<double>(X.values.cols()));
  if (integer_valued(X.values)) {
    grid.delta_e = 1.0;
  } else {
    const double range = X.values.maxCoeff() - X.values.minCoeff();
    grid.delta_e = range > 0.0 ? 1e-6 * range : 1e-6;
  }
  return grid;
}

namespace detail {

inline QuantizedParts rank_zero_parts(const DataMatrix& X, const QuantizationGrid& grid) {
  QuantizedParts parts;
  parts.factors = ReducedSVD{Matrix(X.values.rows(), 0), Vector(0), Matrix(X.values.cols(), 0)};
  parts.E = grid.delta_e * (X.values / grid.delta_e).array().round().matrix();
  return parts;
}

// Grid-dependent half of quantize_decomposition, reusing one factorization
// across the halving rounds. Components whose singular value rounds to zero
// on the sigma grid vanish from the description; E absorbs them.
inline QuantizedParts quantize_from_svd(const DataMatrix& X, const ReducedSVD& f,
                                        const QuantizationGrid& grid) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < f.sigma.size(); ++i)
    if (std::round(f.sigma(i) / grid.delta_sigma) >= 1.0) keep.push_back(i);

  QuantizedParts parts;
  if (keep.empty()) return rank_zero_parts(X, grid);

  const Eigen::Index k = static_cast<Eigen::Index>(keep.size());
  parts.factors.U.resize(f.U.rows(), k);
  parts.factors.sigma.resize(k);
  parts.factors.V.resize(f.V.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    parts.factors.U.col(j) =
        grid.delta_u * (f.U.col(keep[j]) / grid.delta_u).array().round().matrix();
    parts.factors.sigma(j) = grid.delta_sigma * std::round(f.sigma(keep[j]) / grid.delta_sigma);
    parts.factors.V.col(j) =
        grid.delta_v * (f.V.col(keep[j]) / grid.delta_v).array().round().matrix();
  }

  // The decoder snaps the factor reconstruction to the delta_e grid before
  // adding E, so E is quantized against the snapped surface; on-grid data
  // then reproduce exactly.
  const Matrix recon = reconstruct(parts.factors);
  const Matrix snapped = grid.delta_e * (recon / grid.delta_e).array().round().matrix();
  parts.E = grid.delta_e * ((X.values - snapped) / grid.delta_e).array().round().matrix();
  return parts;
}

}  // namespace detail

/// Quantizes one solver candidate: reduced SVD of A, factors rounded to their
/// grids, and E recomputed against the snapped reconstruction so that the
/// description reproduces X at working precision by construction. A zero (or
/// numerically empty) A degenerates to the rank-0 candidate E = X.
inline QuantizedParts quantize_decomposition(const DataMatrix& X, const Matrix& A,
                                             const QuantizationGrid& grid,
                                             double rank_tol = 1e-12) {
  validate(X);
  validate(grid);
  if (A.rows() != X.values.rows() || A.cols() != X.values.cols())
    throw invalid_input_error("quantize_decomposition: A dimensions do not match X");
  if (A.cwiseAbs().maxCoeff() == 0.0) return detail::rank_zero_parts(X, grid);
  try {
    return detail::quantize_from_svd(X, reduced_svd(A, rank_tol), grid);
  } catch (const empty_rank_error&) {
    return detail::rank_zero_parts(X, grid);
  }
}

/// Halves delta_u and delta_v jointly, rescoring after each round, until the
/// total codelength stops strictly decreasing (at most 40 rounds). Returns
/// the winning grid and its bit split.
inline RefinementResult refine_quantization(const DataMatrix& X, const Matrix& A,
                                            const QuantizationGrid& start_grid, UCoderMode u_mode,
                                            double rank_tol = 1e-12) {
  validate(X);
  validate(start_grid);
  if (A.rows() != X.values.rows() || A.cols() != X.values.cols())
    throw invalid_input_error("refine_quantization: A dimensions do not match X");

  std::optional<ReducedSVD> factors;
  if (A.cwiseAbs().maxCoeff() != 0.0) {
    try {
      factors = reduced_svd(A, rank_tol);
    } catch (const empty_rank_error&) {
    }
  }
  const auto score = [&](const QuantizationGrid& grid) {
    const QuantizedParts parts = factors ? detail::quantize_from_svd(X, *factors, grid)
                                         : detail::rank_zero_parts(X, grid);
    return total_codelength(X, parts.factors, parts.E, grid, u_mode);
  };

  RefinementResult best{start_grid, score(start_grid)};
  for (int round = 0; round < 40; ++round) {
    QuantizationGrid probe = best.grid;
    probe.delta_u *= 0.5;
    probe.delta_v *= 0.5;
    const BitAllocation allocation = score(probe);
    if (!(allocation.total.bits < best.allocation.total.bits)) break;
    best = RefinementResult{probe, allocation};
  }
  return best;
}

namespace detail {

inline ModelCandidate scored_candidate(const DataMatrix& X, const Matrix& A,
                                       const QuantizationGrid& start_grid, UCoderMode u_mode) {
  ModelCandidate c;
  const RefinementResult refined = refine_quantization(X, A, start_grid, u_mode);
  QuantizedParts parts = quantize_decomposition(X, A, refined.grid);
  c.solved = true;
  c.rank = parts.factors.rank();
  c.grid = refined.grid;
  c.allocation = refined.allocation;
  c.factors = std::move(parts.factors);
  c.E = std::move(parts.E);
  return c;
}

}  // namespace detail

/// Runs the warm-restarted sweep, scores every converged candidate at its own
/// refined grid, appends the rank-0 and raw-X reference descriptions, and
/// selects the shortest. Failed solves are recorded unsolved and excluded;
/// a sweep with no converged point at all is an error. When no coder mode is
/// forced, frame-shaped data use the predictive image coder for U and
/// everything else uses the spherical coder.
inline SelectionReport select_model(const DataMatrix& X, const LambdaSchedule& schedule,
                                    const SolverConfig& solver_config = {},
                                    std::optional<UCoderMode> mode = std::nullopt,
                                    std::optional<double> delta_e = std::nullopt) {
  validate(X);
  const UCoderMode u_mode =
      mode ? *mode : (X.frame_shape ? UCoderMode::predictive : UCoderMode::spherical);
  QuantizationGrid start_grid = default_grid(X);
  if (delta_e) {
    if (!(*delta_e > 0.0) || !std::isfinite(*delta_e))
      throw invalid_input_error("select_model: delta_e must be a positive real");
    start_grid.delta_e = *delta_e;
  }

  SelectionReport report;
  report.schedule = schedule;
  report.solver = solver_config;
  report.u_mode = u_mode;

  const std::vector<PathPoint> points = rpca_path_points(X.values, schedule, solver_config);
  bool any_solved = false;
  for (const PathPoint& point : points) {
    ModelCandidate c;
    if (point.decomposition) {
      c = detail::scored_candidate(X, point.decomposition->A, start_grid, u_mode);
      any_solved = true;
    }
    c.kind = CandidateKind::swept;
    c.lambda = point.lambda;
    c.stats = point.stats;
    report.candidates.push_back(std::move(c));
  }
  if (!any_solved)
    throw pipeline_error("select_model: no point of the regularization path converged");

  ModelCandidate rank_zero = detail::scored_candidate(
      X, Matrix::Zero(X.values.rows(), X.values.cols()), start_grid, u_mode);
  rank_zero.kind = CandidateKind::rank_zero_reference;
  rank_zero.lambda = std::numeric_limits<double>::infinity();
  report.candidates.push_back(std::move(rank_zero));

  ModelCandidate raw = detail::scored_candidate(X, X.values, start_grid, u_mode);
  raw.kind = CandidateKind::raw_reference;
  raw.lambda = 0.0;
  report.candidates.push_back(std::move(raw));

  report.best_index = 0;
  bool have_best = false;
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const ModelCandidate& c = report.candidates[i];
    if (!c.solved) continue;
    if (!have_best) {
      report.best_index = i;
      have_best = true;
      continue;
    }
    const ModelCandidate& b = report.candidates[report.best_index];
    if (c.allocation.total.bits < b.allocation.total.bits ||
        (c.allocation.total.bits == b.allocation.total.bits && c.rank < b.rank))
      report.best_index = i;
  }
  return report;
}

}  // namespace lrmdl
