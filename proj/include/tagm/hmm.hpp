#pragma once

#include <cstdint>
#include <optional>

#include "tagm/glasso.hpp"
#include "tagm/types.hpp"

namespace tagm {

// Hidden Markov model with Gaussian emissions parameterized by precision
// matrices. Rows of the data matrix are observations.
struct ModelParams {
  Vector pi;                          // K initial state probabilities
  Matrix a;                           // K x K row stochastic transitions
  std::vector<Vector> means;          // K vectors of length d
  std::vector<SymMatrix> precisions;  // K positive definite d x d matrices

  int n_states() const { return static_cast<int>(pi.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

// Throws InputError when shapes disagree, rows fail to normalize, or a
// precision is not positive definite.
void validate_params(const ModelParams& p);

struct EStepResult {
  Matrix gamma;            // N x K posteriors, rows sum to 1
  std::vector<Matrix> xi;  // N-1 pair posteriors, each K x K summing to 1
  double loglik = 0.0;     // log p(X) under the params used for the pass
};

struct InitConfig {
  enum class Cluster { kmeans, gmm };
  enum class Chain { uniform, random_uniform, dirichlet };
  Cluster cluster = Cluster::kmeans;
  Chain chain = Chain::uniform;
  std::uint64_t seed = 0;
};

struct FitConfig {
  int k = 1;
  double lambda = 0.0;
  double tol = 1e-4;  // penalized loglik improvement threshold
  int max_iter = 200;
  int n_init = 1;
  InitConfig init;
};

struct FitResult {
  ModelParams params;
  EStepResult posteriors;
  std::vector<double> trace;  // penalized loglik at each E-step
  IntVector labels;           // argmax of gamma rows, ties to lowest index
  double bic = 0.0;
  int n_free_params = 0;
};

// ln N(x | mu, theta^{-1}) = 0.5 ln|theta| - (d/2) ln 2pi - 0.5 (x-mu)' theta (x-mu)
double log_emission(const Vector& x, const Vector& mu, const SymMatrix& theta);

// Scaled forward-backward pass. Emission rows are max-shifted in log space
// before exponentiation so only the relative collapse of all densities at a
// step can trigger DegenerateEmissionError.
EStepResult forward_backward(const ModelParams& params, const Matrix& x);

// One EM M-step. pi from the first gamma row, transitions from normalized xi
// sums, means from weighted averages, precisions from graphical lasso on the
// weighted scatter at lambda / (state mass). States with mass below 1e-12
// raise EmptyStateError.
ModelParams m_step(const Matrix& x, const EStepResult& e, double lambda);

// M-step byproducts that incremental updates keep as running sums.
struct MStepDetail {
  ModelParams params;
  std::vector<SymMatrix> s_tilde;  // weighted scatter per state
  Vector gamma_sum;                // total responsibility mass per state
  Matrix trans_num;                // summed xi
  Vector trans_den;                // row sums of trans_num
};
MStepDetail m_step_detail(const Matrix& x, const EStepResult& e, double lambda);

// Clustered initialization: k-means or a diagonal covariance mixture on the
// rows, then per-cluster moments with graphical lasso at lambda / cluster
// size. Chain parameters follow cfg.chain. Empty clusters retry with a fresh
// derived seed, up to 10 attempts.
ModelParams initialize(const Matrix& x, int k, const InitConfig& cfg, double lambda = 0.0);

// ln p(X) - (lambda/2) sum_k ||Theta_k||_{1,od}
double penalized_loglik(const ModelParams& params, const Matrix& x, double lambda);

// EM from an explicit starting point; no restarts. Returned params are the
// output of the final M-step, posteriors the E-step that fed it.
FitResult fit_em_from(const Matrix& x, const ModelParams& start, const FitConfig& cfg);

// Best of cfg.n_init restarts (seeds derived from cfg.init.seed), compared on
// final penalized loglik. Restarts that fail are dropped; FitError if all do.
FitResult fit_em(const Matrix& x, const FitConfig& cfg);

// One step ahead forecast: weights = gamma_N' A, prediction = sum_k w_k mu_k.
Vector predict_next(const ModelParams& params, const EStepResult& e);

IntVector labels_from_gamma(const Matrix& gamma);

}  // namespace tagm
