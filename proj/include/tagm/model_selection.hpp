#pragma once

#include <string>

#include "tagm/hmm.hpp"

namespace tagm {

struct BicReport {
  double loglik = 0.0;  // unpenalized
  int n_free = 0;
  long n_obs = 0;
  double score = 0.0;  // loglik - (n_free/2) ln n_obs
};

// (K-1)(K+1) for pi and transitions, K*d for means, plus per state the count
// of lower-triangle-or-diagonal precision entries above the structural zero
// threshold.
int count_free_params(const ModelParams& params);

BicReport bic(double loglik, int n_free, long n_obs);

struct KCandidate {
  int k = 0;
  bool ok = false;
  std::string error;
  BicReport report;
};

struct KSelection {
  int best_k = 0;
  std::vector<KCandidate> candidates;
};

// Fits every distinct K in k_range (ascending, deduplicated) with the same
// config and seed, keeps the highest BIC score, ties to the smaller K.
// Candidates whose fit fails are reported with ok = false and excluded;
// FitError if none survive.
KSelection select_k(const Matrix& x, const IntVector& k_range, const FitConfig& cfg);

// n x n binary matrix, 1 where two time points share a label.
Matrix connectivity_matrix(const IntVector& labels);

struct ConsensusReport {
  Matrix consensus;        // mean connectivity over successful repeats
  double dispersion = 0.0; // (1/n^2) sum 4 (c - 1/2)^2, 1 iff all entries 0/1
  int n_repeats = 0;       // successful repeats
};

// Repeated fits at fixed (k, lambda) under derived seeds; consensus of the
// label connectivity. StabilityError when fewer than 2 repeats survive.
ConsensusReport stability(const Matrix& x, int k, double lambda, int n_repeats,
                          const FitConfig& cfg);

struct LambdaCandidate {
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  ConsensusReport report;
};

struct LambdaSelection {
  double best_lambda = 0.0;
  std::vector<LambdaCandidate> candidates;
};

// Maximizes consensus dispersion over the grid, ties to the larger lambda.
LambdaSelection select_lambda(const Matrix& x, int k, const std::vector<double>& lambda_grid,
                              int n_repeats, const FitConfig& cfg);

}  // namespace tagm
