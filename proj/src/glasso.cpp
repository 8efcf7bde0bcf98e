#include "tagm/glasso.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace tagm {

namespace {

// Soft threshold off-diagonal entries, keep the diagonal. Produces exact
// zeros, which downstream edge counting relies on.
Matrix soft_threshold_od(const Matrix& a, double t) {
  const Eigen::Index d = a.rows();
  Matrix z(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i == j) {
        z(i, j) = a(i, j);
      } else {
        const double v = a(i, j);
        z(i, j) = v > t ? v - t : (v < -t ? v + t : 0.0);
      }
    }
  }
  return z;
}

double log_det_pd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InputError("matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double kkt_residual_raw(const Matrix& s, const Matrix& theta, double lambda) {
  const Eigen::Index d = s.rows();
  Eigen::LLT<Matrix> llt(theta);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Matrix w = llt.solve(Matrix::Identity(d, d));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double g = s(i, j) - w(i, j);
      double v;
      if (i == j) {
        v = std::abs(g);
      } else if (std::abs(theta(i, j)) > kStructuralZeroTol) {
        v = std::abs(g + lambda * (theta(i, j) > 0 ? 1.0 : -1.0));
      } else {
        v = std::max(0.0, std::abs(g) - lambda);
      }
      worst = std::max(worst, v);
    }
  }
  return worst;
}

}  // namespace

double kkt_residual(const SymMatrix& s, const SymMatrix& theta, double lambda) {
  if (s.dim() != theta.dim()) throw InputError("kkt_residual: dimension mismatch");
  if (lambda < 0) throw InputError("kkt_residual: negative lambda");
  return kkt_residual_raw(s.mat(), theta.mat(), lambda);
}

double glasso_objective(const SymMatrix& s, const SymMatrix& theta, double lambda) {
  if (s.dim() != theta.dim()) throw InputError("glasso_objective: dimension mismatch");
  const Matrix& t = theta.mat();
  const double l1od = t.cwiseAbs().sum() - t.diagonal().cwiseAbs().sum();
  return (s.mat() * t).trace() - log_det_pd(t) + lambda * l1od;
}

GlassoResult solve_glasso(const SymMatrix& s_in, double lambda, const GlassoConfig& cfg) {
  if (lambda < 0) throw InputError("solve_glasso: negative lambda");
  if (cfg.tol <= 0 || cfg.max_iter < 1 || cfg.rho <= 0) throw InputError("solve_glasso: bad config");
  const Eigen::Index d = s_in.dim();
  if (d == 0) throw InputError("solve_glasso: empty matrix");

  Matrix s = s_in.mat();
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < 1e-8) s += 1e-6 * Matrix::Identity(d, d);
  }

  double rho = cfg.rho;
  // diagonal warm start puts the iterate on the solution's scale immediately,
  // which matters when S has tiny ridge-dominated diagonal entries
  Matrix z = s.diagonal().cwiseInverse().asDiagonal();
  Matrix x = z;
  Matrix u = Matrix::Zero(d, d);
  Matrix z_old = z;

  double kkt = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    // x update: rho/2 ||x - z + u||^2 + tr(sx) - log det x
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho * (z - u) - s);
    const Vector ev = es.eigenvalues();
    Vector xev(d);
    for (Eigen::Index i = 0; i < d; ++i)
      xev(i) = (ev(i) + std::sqrt(ev(i) * ev(i) + 4.0 * rho)) / (2.0 * rho);
    x = es.eigenvectors() * xev.asDiagonal() * es.eigenvectors().transpose();

    z_old = z;
    z = soft_threshold_od(x + u, lambda / rho);
    z = 0.5 * (z + z.transpose());
    u += x - z;

    const double r_primal = (x - z).cwiseAbs().maxCoeff();
    const double r_dual = rho * (z - z_old).cwiseAbs().maxCoeff();

    if (r_primal < 10 * cfg.tol && r_dual < 10 * cfg.tol) {
      kkt = kkt_residual_raw(s, z, lambda);
      if (kkt <= cfg.tol) {
        Eigen::LLT<Matrix> llt(z);
        const Matrix& theta = llt.info() == Eigen::Success ? z : x;
        return GlassoResult{SymMatrix(theta), it, kkt_residual_raw(s, theta, lambda)};
      }
    }

    // residual balancing keeps the two ADMM residuals comparable
    if (r_primal > 10 * r_dual && rho < 1e8) {
      rho *= 2;
      u *= 0.5;
    } else if (r_dual > 10 * r_primal && rho > 1e-8) {
      rho *= 0.5;
      u *= 2.0;
    }
  }

  Eigen::LLT<Matrix> llt(z);
  const Matrix& last = llt.info() == Eigen::Success ? z : x;
  throw ConvergenceError("solve_glasso: no convergence within iteration limit", last,
                         kkt_residual_raw(s, last, lambda));
}

}  // namespace tagm
