#pragma once

#include <Eigen/QR>
#include <random>

#include "tagm/hmm.hpp"
#include "tagm/types.hpp"

namespace testutil {

using tagm::Matrix;
using tagm::Vector;

// Well conditioned random SPD matrix: random orthogonal basis, eigenvalues
// uniform in [lo, hi].
inline Matrix random_spd(int d, std::mt19937_64& rng, double lo = 0.5, double hi = 2.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(m).householderQ();
  std::uniform_real_distribution<double> u(lo, hi);
  Vector ev(d);
  for (int i = 0; i < d; ++i) ev(i) = u(rng);
  return q * ev.asDiagonal() * q.transpose();
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline Vector random_simplex(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vector v(k);
  for (int i = 0; i < k; ++i) v(i) = u(rng);
  return v / v.sum();
}

inline Matrix random_stochastic(int k, std::mt19937_64& rng) {
  Matrix a(k, k);
  for (int i = 0; i < k; ++i) a.row(i) = random_simplex(k, rng).transpose();
  return a;
}

// Arbitrary valid model with well conditioned precisions.
inline tagm::ModelParams random_params(int k, int d, std::mt19937_64& rng) {
  tagm::ModelParams p;
  p.pi = random_simplex(k, rng);
  p.a = random_stochastic(k, rng);
  for (int j = 0; j < k; ++j) {
    p.means.push_back(random_matrix(d, 1, rng, 2.0).col(0));
    p.precisions.emplace_back(random_spd(d, rng));
  }
  return p;
}

}  // namespace testutil
