#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace lrmdl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class of every exception thrown by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite entries or structurally malformed numeric input.
class invalid_input_error : public error {
 public:
  using error::error;
};

/// Argument outside a function's mathematical domain.
class domain_error : public error {
 public:
  using error::error;
};

/// A quantity rounded to zero where a positive integer is required.
class underflow_error : public error {
 public:
  using error::error;
};

/// Matrix has no singular value above the rank cutoff.
class empty_rank_error : public error {
 public:
  using error::error;
};

/// Malformed file contents; the message names the file and location.
class format_error : public error {
 public:
  using error::error;
};

/// Filesystem-level failure (missing path, unwritable directory, ...).
class io_error : public error {
 public:
  using error::error;
};

/// Inputs that must agree numerically (e.g. A + E = X) do not.
class consistency_error : public error {
 public:
  using error::error;
};

/// An iterative method ran out of iterations.
class convergence_error : public error {
 public:
  using error::error;
};

/// Every candidate of a selection run failed; no model can be reported.
class pipeline_error : public error {
 public:
  using error::error;
};

/// Image geometry of one frame when a matrix column is a raster scan.
struct FrameShape {
  int height = 0;
  int width = 0;

  friend bool operator==(const FrameShape&, const FrameShape&) = default;
};

/// Dense real data matrix. Columns are observations (frames), rows are
/// variables (pixels). When frame_shape is set, column j is the row-major
/// raster scan of an height x width image and rows == height * width.
struct DataMatrix {
  Matrix values;
  std::optional<FrameShape> frame_shape;
};

inline void validate(const DataMatrix& X) {
  if (X.values.rows() < 1 || X.values.cols() < 1)
    throw invalid_input_error("data matrix must have at least one row and one column");
  if (!X.values.allFinite())
    throw invalid_input_error("data matrix has non-finite entries");
  if (X.frame_shape) {
    const auto& fs = *X.frame_shape;
    if (fs.height < 1 || fs.width < 1)
      throw invalid_input_error("frame shape must be positive");
    if (static_cast<Eigen::Index>(fs.height) * fs.width != X.values.rows())
      throw invalid_input_error("frame shape does not match the matrix row count");
  }
}

/// True when every entry of M is an exact integer.
inline bool integer_valued(const Matrix& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      if (M(i, j) != std::floor(M(i, j))) return false;
  return true;
}

}  // namespace lrmdl
