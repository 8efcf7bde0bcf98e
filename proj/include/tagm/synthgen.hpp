#pragma once

#include <cstdint>

#include "tagm/rng.hpp"
#include "tagm/types.hpp"

namespace tagm {

enum class MeanMode { normal, uniform };
enum class CovMode { degree_bounded, random_spd, stressed };
enum class TransitionMode {
  sudden,
  fixed_smooth,
  random_smooth,
  random_smooth_random_weights,
};

struct GeneratorConfig {
  long n = 1000;
  int k = 3;
  int d = 10;
  MeanMode mean_mode = MeanMode::normal;
  double mean_lo = -10.0;  // uniform mode bounds
  double mean_hi = 10.0;
  CovMode cov_mode = CovMode::degree_bounded;
  int max_degree = 3;      // degree_bounded
  double edge_prob = 0.5;  // stressed
  double kappa = 50.0;     // Dirichlet self-transition concentration
  TransitionMode transition = TransitionMode::sudden;
  int smooth_steps = 10;  // fixed_smooth duration
  int smooth_lo = 5;      // random_smooth duration bounds, inclusive
  int smooth_hi = 20;
  std::uint64_t seed = 0;
};

// Ground truth bundle. Sigmas are the sampling covariances, precisions their
// stored inverses.
struct TrueParams {
  Vector pi;  // uniform; generation starts from a uniform state draw
  Matrix a;
  std::vector<Vector> means;
  std::vector<Matrix> sigmas;
  std::vector<SymMatrix> precisions;
};

struct SyntheticDataset {
  Matrix x;        // n x d observations
  IntVector labels;
  Matrix weights;  // n x k blending weights, rows on the simplex
  TrueParams truth;
};

std::vector<Vector> gen_means(int k, int d, MeanMode mode, double lo, double hi, Rng& rng);

// Identity diagonal plus symmetric edges of weight 0.98 / max_degree. Each
// node draws neighbours uniformly among partners with spare degree budget, so
// every realized degree stays <= max_degree and the matrix stays strictly
// diagonally dominant, hence positive definite.
SymMatrix gen_precision_degree_bounded(int d, int max_degree, Rng& rng);

// M'M + d * 1e-3 * I with standard normal M.
SymMatrix gen_precision_random_spd(int d, Rng& rng);

// Identity plus Bernoulli(edge_prob) 0/1 edges; when the result is not
// positive definite each diagonal entry is inflated to 1 + its row degree.
SymMatrix gen_precision_stressed(int d, double edge_prob, Rng& rng);

// Rows drawn from Dirichlet with concentration kappa on the diagonal entry
// and 1 elsewhere.
Matrix gen_transition_matrix(int k, double kappa, Rng& rng);

// Markov chain plus regime dependent blending of (mu, Sigma); labels are the
// weight argmax with ties toward the transition destination.
SyntheticDataset generate(const GeneratorConfig& cfg);

}  // namespace tagm
