#pragma once

#include "tagm/types.hpp"

namespace tagm {

struct GlassoConfig {
  double tol = 1e-6;    // stationarity tolerance, max-norm
  int max_iter = 1000;  // ADMM iteration cap
  double rho = 1.0;     // initial ADMM penalty, adapted by residual balancing
};

struct GlassoResult {
  SymMatrix theta;
  int iterations = 0;
  double kkt = 0.0;  // stationarity residual at the returned iterate
};

// L1 penalized precision estimation:
//   minimize  tr(S*Theta) - log det Theta + lambda * ||Theta||_{1,offdiag}
// over positive definite Theta, solved by ADMM proximal splitting (an
// eigendecomposition handles the log-det prox, entrywise soft thresholding
// handles the penalty and leaves the diagonal untouched). If S is near
// singular (min eigenvalue < 1e-8) a 1e-6 ridge is added before solving.
// Entries of the solution below 1e-8 in magnitude are exact zeros.
GlassoResult solve_glasso(const SymMatrix& s, double lambda, const GlassoConfig& cfg = {});

// Max-norm violation of the stationarity condition
//   S - Theta^{-1} + lambda * G = 0
// where G is a valid subgradient of the off-diagonal L1 norm (zero diagonal,
// sign on nonzero entries, free in [-1, 1] on zero entries). Zero iff theta
// is exactly optimal for (s, lambda).
double kkt_residual(const SymMatrix& s, const SymMatrix& theta, double lambda);

// Objective value tr(S*Theta) - log det Theta + lambda*||Theta||_{1,od}.
// Throws InputError if theta is not positive definite.
double glasso_objective(const SymMatrix& s, const SymMatrix& theta, double lambda);

// Magnitude below which a precision entry counts as a structural zero.
inline constexpr double kStructuralZeroTol = 1e-8;

}  // namespace tagm
