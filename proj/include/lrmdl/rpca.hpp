#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lrmdl/linalg.hpp"
#include "lrmdl/types.hpp"

namespace lrmdl {

/// Augmented-Lagrangian solver knobs. tol is the relative primal-residual
/// threshold; mu0 unset means 1.25 / sigma_max(X).
struct SolverConfig {
  double tol = 1e-7;
  int max_iter = 1000;
  std::optional<double> mu0;
  double rho = 1.5;
};

/// One split X = A + E obtained at a given lambda, the weight on the nuclear
/// norm in the objective ||X - A||_1 + lambda * ||A||_*.
struct Decomposition {
  Matrix A;
  Matrix E;
  double lambda = 0.0;
};

/// Iterate of the augmented-Lagrangian method. Threaded between path points:
/// A, E and the multiplier Y are carried into the next solve while the
/// penalty mu restarts at mu0 (a carried mu freezes the primal updates, a
/// discarded Y forfeits the warm start's iteration savings).
struct AlmState {
  Matrix A;
  Matrix E;
  Matrix Y;
  double mu = 0.0;
  long iter = 0;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // ||X - A - E||_F / ||X||_F at exit
  bool converged = false;
};

/// Iteration budget exhausted. Carries the last iterate so a sweep can skip
/// the candidate and still warm-start the next one.
class alm_convergence_error : public convergence_error {
 public:
  alm_convergence_error(std::string message, AlmState last, SolveStats stats)
      : convergence_error(std::move(message)), last_(std::move(last)), stats_(stats) {}

  const AlmState& last_state() const { return last_; }
  const SolveStats& stats() const { return stats_; }

 private:
  AlmState last_;
  SolveStats stats_;
};

/// Sweep values for lambda, strictly decreasing so the retained rank can only
/// grow along the path (the warm-start-friendly order).
struct LambdaSchedule {
  std::vector<double> values;
};

inline void validate(const LambdaSchedule& schedule) {
  if (schedule.values.empty()) throw invalid_input_error("lambda schedule is empty");
  double prev = std::numeric_limits<double>::infinity();
  for (double v : schedule.values) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw invalid_input_error("lambda schedule values must be positive finite reals");
    if (!(v < prev)) throw invalid_input_error("lambda schedule must be strictly decreasing");
    prev = v;
  }
}

/// ||X - W||_1 + lambda * ||W||_*.
inline double rpca_objective(const Matrix& X, const Matrix& W, double lambda) {
  if (X.rows() != W.rows() || X.cols() != W.cols())
    throw invalid_input_error("rpca_objective: dimension mismatch");
  if (!X.allFinite() || !W.allFinite())
    throw invalid_input_error("rpca_objective: non-finite entries");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw invalid_input_error("rpca_objective: lambda must be a positive real");
  const double nuclear = Eigen::BDCSVD<Matrix>(W).singularValues().sum();
  return (X - W).cwiseAbs().sum() + lambda * nuclear;
}

namespace detail {

inline void validate_solver_config(const SolverConfig& cfg) {
  if (!(cfg.tol > 0.0) || !std::isfinite(cfg.tol))
    throw invalid_input_error("solver config: tol must be a positive real");
  if (cfg.max_iter < 1) throw invalid_input_error("solver config: max_iter must be at least 1");
  if (!(cfg.rho > 1.0) || !std::isfinite(cfg.rho))
    throw invalid_input_error("solver config: rho must exceed 1");
  if (cfg.mu0 && (!(*cfg.mu0 > 0.0) || !std::isfinite(*cfg.mu0)))
    throw invalid_input_error("solver config: mu0 must be a positive real");
}

// Inexact augmented-Lagrangian iteration on the canonical form
//   min ||A||_* + lambda_e ||E||_1  s.t.  X = A + E,  lambda_e = 1 / lambda.
// Stops on the relative primal residual. The residual is only meaningful
// because mu restarts at mu0 every solve: the first iterations re-threshold
// at the coarse 1/mu0 scale, so a warm-started iterate (feasible for the
// previous lambda) cannot pass the check before it has adapted to this one.
inline Decomposition rpca_alm_impl(const Matrix& X, double lambda, const SolverConfig& cfg,
                                   AlmState* carry, SolveStats* stats_out) {
  if (X.rows() < 1 || X.cols() < 1) throw invalid_input_error("rpca_alm: empty matrix");
  if (!X.allFinite()) throw invalid_input_error("rpca_alm: non-finite entries");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw invalid_input_error("rpca_alm: lambda must be a positive real");
  validate_solver_config(cfg);

  const double norm_x = X.norm();
  if (norm_x == 0.0) {
    if (carry) *carry = AlmState{Matrix::Zero(X.rows(), X.cols()), Matrix::Zero(X.rows(), X.cols()),
                                 Matrix::Zero(X.rows(), X.cols()), 0.0, 0};
    if (stats_out) *stats_out = SolveStats{0, 0.0, true};
    return Decomposition{Matrix::Zero(X.rows(), X.cols()), Matrix::Zero(X.rows(), X.cols()), lambda};
  }

  const double lambda_e = 1.0 / lambda;
  const double sigma_max = Eigen::BDCSVD<Matrix>(X).singularValues()(0);
  const double mu0 = cfg.mu0 ? *cfg.mu0 : 1.25 / sigma_max;
  const double mu_cap = 1e30;

  Matrix A, E, Y;
  if (carry && carry->A.size() > 0) {
    A = carry->A;
    E = carry->E;
    Y = carry->Y;
  } else {
    A = Matrix::Zero(X.rows(), X.cols());
    E = Matrix::Zero(X.rows(), X.cols());
    const double dual_scale = std::max(sigma_max, X.cwiseAbs().maxCoeff() / lambda_e);
    Y = X / dual_scale;
  }

  double mu = mu0;
  SolveStats stats;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    A = singular_value_threshold(X - E + Y / mu, 1.0 / mu);
    E = soft_threshold(X - A + Y / mu, lambda_e / mu);
    const Matrix R = X - A - E;

    const double primal = R.norm() / norm_x;
    stats = SolveStats{iter, primal, primal <= cfg.tol};
    if (stats.converged) {
      if (carry) *carry = AlmState{A, E, Y, mu, iter};
      if (stats_out) *stats_out = stats;
      return Decomposition{std::move(A), std::move(E), lambda};
    }

    Y += mu * R;
    mu = std::min(mu * cfg.rho, mu_cap);
  }

  AlmState last{A, E, Y, mu, cfg.max_iter};
  if (carry) *carry = last;
  if (stats_out) *stats_out = stats;
  throw alm_convergence_error("rpca_alm: no convergence within " + std::to_string(cfg.max_iter) +
                                  " iterations at lambda " + std::to_string(lambda),
                              std::move(last), stats);
}

}  // namespace detail

/// Solve min ||X - A||_1 + lambda * ||A||_* via the split X = A + E. An init
/// decomposition seeds the primal iterate (the multiplier starts from the
/// scaled-X dual init either way).
inline Decomposition rpca_alm(const Matrix& X, double lambda, const SolverConfig& config = {},
                              const std::optional<Decomposition>& init = std::nullopt,
                              SolveStats* stats = nullptr) {
  if (init) {
    if (init->A.rows() != X.rows() || init->A.cols() != X.cols() ||
        init->E.rows() != X.rows() || init->E.cols() != X.cols())
      throw invalid_input_error("rpca_alm: init decomposition dimension mismatch");
    AlmState seed{init->A, init->E, Matrix::Zero(X.rows(), X.cols()), 0.0, 0};
    if (X.norm() > 0.0) {
      const double sigma_max = Eigen::BDCSVD<Matrix>(X).singularValues()(0);
      const double dual_scale = std::max(sigma_max, X.cwiseAbs().maxCoeff() * lambda);
      seed.Y = X / dual_scale;
    }
    return detail::rpca_alm_impl(X, lambda, config, &seed, stats);
  }
  return detail::rpca_alm_impl(X, lambda, config, nullptr, stats);
}

/// One sweep point. decomposition is empty when that solve ran out of
/// iterations; stats always reflects the exit state.
struct PathPoint {
  double lambda = 0.0;
  std::optional<Decomposition> decomposition;
  SolveStats stats;
};

/// Sweep the schedule with warm restarts, never aborting on a failed point:
/// the failure is recorded and its last iterate still seeds the next solve.
inline std::vector<PathPoint> rpca_path_points(const Matrix& X, const LambdaSchedule& schedule,
                                               const SolverConfig& config = {}) {
  validate(schedule);
  std::vector<PathPoint> points;
  points.reserve(schedule.values.size());
  AlmState state;
  for (double lambda : schedule.values) {
    SolveStats stats;
    try {
      Decomposition d = detail::rpca_alm_impl(X, lambda, config, &state, &stats);
      points.push_back(PathPoint{lambda, std::move(d), stats});
    } catch (const alm_convergence_error& e) {
      state = e.last_state();
      points.push_back(PathPoint{lambda, std::nullopt, e.stats()});
    }
  }
  return points;
}

/// Warm-restarted sweep that requires every point to converge; a failure
/// propagates annotated with its position in the schedule.
inline std::vector<Decomposition> rpca_path(const Matrix& X, const LambdaSchedule& schedule,
                                            const SolverConfig& config = {}) {
  validate(schedule);
  std::vector<Decomposition> result;
  result.reserve(schedule.values.size());
  AlmState state;
  for (std::size_t t = 0; t < schedule.values.size(); ++t) {
    try {
      result.push_back(detail::rpca_alm_impl(X, schedule.values[t], config, &state, nullptr));
    } catch (const alm_convergence_error& e) {
      throw alm_convergence_error("rpca_path: point " + std::to_string(t) + " failed: " + e.what(),
                                  e.last_state(), e.stats());
    }
  }
  return result;
}

/// Default sweep: 30 geometrically spaced values of the internal sparsity
/// weight 1 / lambda covering [0.05, 4] / sqrt(max(m, n)), emitted in the
/// equivalent strictly decreasing lambda order.
inline LambdaSchedule default_schedule(const Matrix& X, int count = 30) {
  if (X.rows() < 1 || X.cols() < 1) throw invalid_input_error("default_schedule: empty matrix");
  if (count < 1) throw invalid_input_error("default_schedule: count must be at least 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max(X.rows(), X.cols())));
  const double lo = 0.05 * scale;
  const double hi = 4.0 * scale;
  LambdaSchedule schedule;
  schedule.values.reserve(count);
  for (int t = 0; t < count; ++t) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(t) / (count - 1);
    const double sparsity_weight = lo * std::pow(hi / lo, frac);
    schedule.values.push_back(1.0 / sparsity_weight);
  }
  std::sort(schedule.values.begin(), schedule.values.end(), std::greater<>());
  return schedule;
}

/// A + E must reproduce X within the solver tolerance.
inline void validate(const Decomposition& d, const Matrix& X, double tol = 1e-7) {
  if (d.A.rows() != X.rows() || d.A.cols() != X.cols() || d.E.rows() != X.rows() ||
      d.E.cols() != X.cols())
    throw invalid_input_error("decomposition dimensions do not match the data matrix");
  if ((X - d.A - d.E).norm() > tol * std::max(1.0, X.norm()))
    throw consistency_error("decomposition does not reproduce the data matrix");
}

}  // namespace lrmdl
