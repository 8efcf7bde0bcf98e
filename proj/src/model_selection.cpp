#include "tagm/model_selection.hpp"

#include <algorithm>
#include <cmath>

#include "tagm/glasso.hpp"
#include "tagm/rng.hpp"

namespace tagm {

int count_free_params(const ModelParams& params) {
  const int k = params.n_states();
  const int d = params.dim();
  int nu = (k - 1) * (k + 1) + k * d;
  for (const auto& theta : params.precisions)
    for (Eigen::Index i = 0; i < theta.dim(); ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        if (std::abs(theta(i, j)) >= kStructuralZeroTol) ++nu;
  return nu;
}

BicReport bic(double loglik, int n_free, long n_obs) {
  if (n_obs < 1) throw InputError("bic: n_obs must be positive");
  if (n_free < 0) throw InputError("bic: negative parameter count");
  BicReport r;
  r.loglik = loglik;
  r.n_free = n_free;
  r.n_obs = n_obs;
  r.score = loglik - 0.5 * n_free * std::log(static_cast<double>(n_obs));
  return r;
}

KSelection select_k(const Matrix& x, const IntVector& k_range, const FitConfig& cfg) {
  if (k_range.empty()) throw InputError("select_k: empty k range");
  IntVector ks = k_range;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  KSelection out;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k : ks) {
    KCandidate cand;
    cand.k = k;
    try {
      FitConfig c = cfg;
      c.k = k;
      FitResult fit = fit_em(x, c);
      cand.ok = true;
      cand.report = bic(fit.posteriors.loglik, fit.n_free_params, x.rows());
      // strict > keeps the smaller K on ties
      if (cand.report.score > best_score) {
        best_score = cand.report.score;
        out.best_k = k;
      }
    } catch (const Error& err) {
      cand.error = err.what();
    }
    out.candidates.push_back(std::move(cand));
  }
  if (out.best_k == 0) throw FitError("select_k: every candidate K failed to fit");
  return out;
}

Matrix connectivity_matrix(const IntVector& labels) {
  if (labels.empty()) throw InputError("connectivity_matrix: empty labels");
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = labels[i] == labels[j] ? 1.0 : 0.0;
  return c;
}

ConsensusReport stability(const Matrix& x, int k, double lambda, int n_repeats,
                          const FitConfig& cfg) {
  if (n_repeats < 2) throw InputError("stability: need at least 2 repeats");
  const Eigen::Index n = x.rows();
  Matrix acc = Matrix::Zero(n, n);
  int ok = 0;
  for (int r = 0; r < n_repeats; ++r) {
    FitConfig c = cfg;
    c.k = k;
    c.lambda = lambda;
    c.init.seed = derive_seed(derive_seed(cfg.init.seed, 0x57AB1E17ULL), r);
    try {
      FitResult fit = fit_em(x, c);
      acc += connectivity_matrix(fit.labels);
      ++ok;
    } catch (const Error&) {
    }
  }
  if (ok < 2) throw StabilityError("stability: fewer than 2 repeats succeeded");
  ConsensusReport rep;
  rep.consensus = acc / static_cast<double>(ok);
  rep.n_repeats = ok;
  rep.dispersion = (4.0 * (rep.consensus.array() - 0.5).square()).sum() /
                   static_cast<double>(n * n);
  return rep;
}

LambdaSelection select_lambda(const Matrix& x, int k, const std::vector<double>& lambda_grid,
                              int n_repeats, const FitConfig& cfg) {
  if (lambda_grid.empty()) throw InputError("select_lambda: empty grid");
  LambdaSelection out;
  bool found = false;
  double best = -std::numeric_limits<double>::infinity();
  for (double lambda : lambda_grid) {
    if (lambda < 0) throw InputError("select_lambda: negative lambda");
    LambdaCandidate cand;
    cand.lambda = lambda;
    try {
      cand.report = stability(x, k, lambda, n_repeats, cfg);
      cand.ok = true;
      const double disp = cand.report.dispersion;
      // ties go to the larger lambda
      if (!found || disp > best || (disp == best && lambda > out.best_lambda)) {
        best = disp;
        out.best_lambda = lambda;
        found = true;
      }
    } catch (const Error& err) {
      cand.error = err.what();
    }
    out.candidates.push_back(std::move(cand));
  }
  if (!found) throw StabilityError("select_lambda: every candidate lambda failed");
  return out;
}

}  // namespace tagm
