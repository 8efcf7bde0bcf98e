#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "tagm/glasso.hpp"

using namespace tagm;
using testutil::random_spd;

namespace {

// Independent 2x2 minimizer: refine a dense grid over (theta00, theta11,
// theta01), evaluating the objective directly. Knows nothing about the
// solver; accuracy is set by the final grid step (~1e-5).
Matrix grid_minimizer_2x2(const Matrix& s, double lambda) {
  auto objective = [&](double a, double c, double b) {
    const double det = a * c - b * b;
    if (a <= 1e-9 || c <= 1e-9 || det <= 1e-12) return std::numeric_limits<double>::infinity();
    return s(0, 0) * a + s(1, 1) * c + 2.0 * s(0, 1) * b - std::log(det) +
           2.0 * lambda * std::abs(b);
  };
  double ca = 1.0, cc = 1.0, cb = 0.0;  // current center
  double span = 5.0;
  for (int level = 0; level < 9; ++level) {
    double best = std::numeric_limits<double>::infinity();
    double ba = ca, bc = cc, bb = cb;
    const int g = 20;
    for (int ia = -g; ia <= g; ++ia) {
      for (int ic = -g; ic <= g; ++ic) {
        for (int ib = -g; ib <= g; ++ib) {
          const double a = ca + span * ia / g;
          const double c = cc + span * ic / g;
          const double b = cb + span * ib / g;
          const double v = objective(a, c, b);
          if (v < best) {
            best = v;
            ba = a;
            bc = c;
            bb = b;
          }
        }
      }
    }
    ca = ba;
    cc = bc;
    cb = bb;
    span *= 0.2;
  }
  Matrix t(2, 2);
  t << ca, cb, cb, cc;
  return t;
}

}  // namespace

TEST_CASE("symmetric storage rejects bad input") {
  Matrix m(2, 3);
  m.setZero();
  CHECK_THROWS_AS(SymMatrix{m}, InputError);
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK_THROWS_AS(SymMatrix{a}, InputError);
  a << 1, std::numeric_limits<double>::quiet_NaN(), 2, 1;
  CHECK_THROWS_AS(SymMatrix{a}, InputError);
  Matrix ok(2, 2);
  ok << 2, 1, 1, 2;
  const SymMatrix sm(ok);
  CHECK(sm(0, 1) == 1.0);
}

TEST_CASE("stationarity residual hand values") {
  const SymMatrix eye = SymMatrix::identity(3);
  const SymMatrix twice(Matrix(2.0 * Matrix::Identity(3, 3)));
  // theta = 2I has inverse 0.5I, diagonal gap 0.5
  CHECK(kkt_residual(eye, twice, 0.0) == doctest::Approx(0.5).epsilon(1e-12));

  Matrix s(2, 2), t(2, 2);
  s << 2, 0, 0, 3;
  t << 0.5, 0, 0, 1.0 / 3.0;
  CHECK(kkt_residual(SymMatrix(s), SymMatrix(t), 10.0) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(kkt_residual(eye, twice, -1.0), InputError);
}

TEST_CASE("diagonal input with heavy penalty has closed form") {
  Matrix s(2, 2);
  s << 2, 0, 0, 3;
  const GlassoResult r = solve_glasso(SymMatrix(s), 10.0);
  CHECK(r.theta(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.theta(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
  CHECK(r.theta(0, 1) == 0.0);  // soft threshold produces exact zeros
  CHECK(r.kkt <= 1e-6);
}

TEST_CASE("identity input is its own solution") {
  const GlassoResult r = solve_glasso(SymMatrix::identity(4), 0.0);
  CHECK((r.theta.mat() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero penalty recovers the inverse") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const int d = 2 + static_cast<int>(rng() % 5);
    const Matrix s = random_spd(d, rng);
    const GlassoResult r = solve_glasso(SymMatrix(s), 0.0);
    CHECK(r.kkt <= 1e-6);
    const Matrix inv = s.inverse();
    CHECK((r.theta.mat() - inv).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("agrees with the dense grid minimizer in 2d") {
  std::mt19937_64 rng(23);
  for (double lambda : {0.0, 0.05, 0.2}) {
    for (int rep = 0; rep < 4; ++rep) {
      const Matrix s = random_spd(2, rng);
      const GlassoResult r = solve_glasso(SymMatrix(s), lambda);
      const Matrix oracle = grid_minimizer_2x2(s, lambda);
      CHECK((r.theta.mat() - oracle).cwiseAbs().maxCoeff() < 1e-3);
    }
  }
}

TEST_CASE("stationarity tolerance holds across penalties and sizes") {
  std::mt19937_64 rng(37);
  for (double lambda : {0.0, 0.05, 0.2, 1.0}) {
    for (int rep = 0; rep < 5; ++rep) {
      const int d = 2 + static_cast<int>(rng() % 5);
      const Matrix s = random_spd(d, rng);
      const GlassoResult r = solve_glasso(SymMatrix(s), lambda);
      CHECK(r.kkt <= 1e-6);
      CHECK(kkt_residual(SymMatrix(s), r.theta, lambda) <= 1e-6);
      Eigen::LLT<Matrix> llt(r.theta.mat());
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("sparsity is monotone in the penalty") {
  std::mt19937_64 rng(5);
  const Matrix s = random_spd(6, rng, 0.5, 3.0);
  int prev_nnz = std::numeric_limits<int>::max();
  for (double lambda : {0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
    const GlassoResult r = solve_glasso(SymMatrix(s), lambda);
    int nnz = 0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        if (i != j && std::abs(r.theta(i, j)) >= kStructuralZeroTol) ++nnz;
    CHECK(nnz <= prev_nnz);
    prev_nnz = nnz;
  }
}

TEST_CASE("objective beats simple fallbacks") {
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix s = random_spd(5, rng);
    const double lambda = 0.1;
    const SymMatrix ss(s);
    const GlassoResult r = solve_glasso(ss, lambda);
    const double obj = glasso_objective(ss, r.theta, lambda);
    const Matrix ridge_inv = (s + 1e-6 * Matrix::Identity(5, 5)).inverse();
    CHECK(obj <= glasso_objective(ss, SymMatrix(ridge_inv), lambda) + 1e-8);
    const Matrix diag_inv = s.diagonal().cwiseInverse().asDiagonal();
    CHECK(obj <= glasso_objective(ss, SymMatrix(diag_inv), lambda) + 1e-8);
  }
}

TEST_CASE("singular input is regularized, not rejected") {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 0) = 1.0;  // rank 1
  const GlassoResult r = solve_glasso(SymMatrix(s), 0.1);
  Eigen::LLT<Matrix> llt(r.theta.mat());
  CHECK(llt.info() == Eigen::Success);
  CHECK(r.kkt <= 1e-6);
}

TEST_CASE("iteration cap raises a convergence error with the last iterate") {
  std::mt19937_64 rng(3);
  const Matrix s = random_spd(4, rng);
  GlassoConfig cfg;
  cfg.max_iter = 1;
  try {
    solve_glasso(SymMatrix(s), 0.1, cfg);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_iterate.rows() == 4);
    CHECK(e.residual > 0.0);
  }
}

TEST_CASE("bad arguments are rejected") {
  CHECK_THROWS_AS(solve_glasso(SymMatrix::identity(2), -0.5), InputError);
  GlassoConfig cfg;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(solve_glasso(SymMatrix::identity(2), 0.1, cfg), InputError);
}
