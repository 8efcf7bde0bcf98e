#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy. The CLI maps these onto exit codes, library users can
// catch them individually.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong dimensions, asymmetric matrices, bad ranges.
struct InputError : Error {
  using Error::Error;
};

// Unreadable or unwritable files, malformed CSV/JSON payloads.
struct IoError : Error {
  using Error::Error;
};

// An iterative solver ran out of iterations before reaching its tolerance.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& msg, Matrix last, double res)
      : Error(msg), last_iterate(std::move(last)), residual(res) {}
  Matrix last_iterate;
  double residual;
};

// A state lost all responsibility mass during EM.
struct EmptyStateError : Error {
  EmptyStateError(const std::string& msg, int state) : Error(msg), state(state) {}
  int state;
};

// Every restart of a fit failed.
struct FitError : Error {
  using Error::Error;
};

// All emission densities underflowed at some step.
struct DegenerateEmissionError : Error {
  using Error::Error;
};

// Fewer than two stability repeats survived.
struct StabilityError : Error {
  using Error::Error;
};

// Something that should be impossible happened (e.g. a non-monotone EM trace).
struct InternalError : Error {
  using Error::Error;
};

// Square real matrix with storage-enforced symmetry. Construction symmetrizes
// exactly via 0.5*(m + m^T) and rejects inputs that are not symmetric to
// begin with (beyond a small relative slack for round-trip noise).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m, double asym_tol = 1e-9) {
    if (m.rows() != m.cols()) throw InputError("SymMatrix: matrix is not square");
    if (!m.allFinite()) throw InputError("SymMatrix: non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > asym_tol * scale) throw InputError("SymMatrix: matrix is not symmetric");
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }

  const Matrix& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

using IntVector = std::vector<int>;

}  // namespace tagm
