#include "tagm/hmm.hpp"

#include <cmath>
#include <limits>

#include "tagm/detail.hpp"
#include "tagm/model_selection.hpp"
#include "tagm/rng.hpp"

namespace tagm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Internal solves run tighter than the public glasso defaults so that M-step
// inexactness stays far below the EM monotonicity slack.
const GlassoConfig kInnerGlasso{1e-8, 4000, 1.0};

struct EmissionModel {
  std::vector<double> half_log_det;  // 0.5 ln|Theta_k|
  double log_norm;                   // (d/2) ln 2pi
};

EmissionModel prepare_emissions(const ModelParams& p) {
  EmissionModel em;
  em.log_norm = 0.5 * p.dim() * std::log(kTwoPi);
  em.half_log_det.reserve(p.precisions.size());
  for (const auto& theta : p.precisions) {
    Eigen::LLT<Matrix> llt(theta.mat());
    if (llt.info() != Eigen::Success)
      throw InputError("emission precision is not positive definite");
    em.half_log_det.push_back(llt.matrixLLT().diagonal().array().log().sum());
  }
  return em;
}

// N x K matrix of log emission densities.
Matrix log_emission_matrix(const ModelParams& p, const Matrix& x) {
  const EmissionModel em = prepare_emissions(p);
  const Eigen::Index n = x.rows();
  const int k = p.n_states();
  Matrix out(n, k);
  for (int j = 0; j < k; ++j) {
    const Matrix xc = x.rowwise() - p.means[j].transpose();
    const Vector quad = ((xc * p.precisions[j].mat()).array() * xc.array()).rowwise().sum();
    out.col(j) = (em.half_log_det[j] - em.log_norm) - 0.5 * quad.array();
  }
  return out;
}

double offdiag_l1(const Matrix& m) {
  return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
}

double penalty_term(const ModelParams& p, double lambda) {
  double s = 0.0;
  for (const auto& theta : p.precisions) s += offdiag_l1(theta.mat());
  return 0.5 * lambda * s;
}

}  // namespace

void validate_params(const ModelParams& p) {
  const int k = p.n_states();
  if (k < 1) throw InputError("params: no states");
  if (p.a.rows() != k || p.a.cols() != k) throw InputError("params: transition shape mismatch");
  if (static_cast<int>(p.means.size()) != k || static_cast<int>(p.precisions.size()) != k)
    throw InputError("params: state count mismatch");
  const int d = p.dim();
  if (d < 1) throw InputError("params: empty mean");
  if (!p.pi.allFinite() || p.pi.minCoeff() < 0 || std::abs(p.pi.sum() - 1.0) > 1e-9)
    throw InputError("params: pi is not a distribution");
  for (int j = 0; j < k; ++j) {
    if (!p.a.row(j).allFinite() || p.a.row(j).minCoeff() < 0 ||
        std::abs(p.a.row(j).sum() - 1.0) > 1e-9)
      throw InputError("params: transition row is not a distribution");
    if (p.means[j].size() != d) throw InputError("params: mean length mismatch");
    if (p.precisions[j].dim() != d) throw InputError("params: precision shape mismatch");
  }
  prepare_emissions(p);  // PD check
}

double log_emission(const Vector& x, const Vector& mu, const SymMatrix& theta) {
  const Eigen::Index d = x.size();
  if (mu.size() != d || theta.dim() != d) throw InputError("log_emission: dimension mismatch");
  Eigen::LLT<Matrix> llt(theta.mat());
  if (llt.info() != Eigen::Success) throw InputError("log_emission: theta not positive definite");
  const double half_log_det = llt.matrixLLT().diagonal().array().log().sum();
  const Vector xc = x - mu;
  return half_log_det - 0.5 * d * std::log(kTwoPi) - 0.5 * xc.dot(theta.mat() * xc);
}

EStepResult forward_backward(const ModelParams& params, const Matrix& x) {
  validate_params(params);
  const Eigen::Index n = x.rows();
  const int k = params.n_states();
  if (n < 1) throw InputError("forward_backward: empty data");
  if (x.cols() != params.dim()) throw InputError("forward_backward: dimension mismatch");

  const Matrix loge = log_emission_matrix(params, x);
  // Shift each row by its max before exponentiating; the shifts go back into
  // the log likelihood through the scaling constants.
  const Vector shift = loge.rowwise().maxCoeff();
  const Matrix e = (loge.colwise() - shift).array().exp();

  Matrix alpha(n, k);
  Vector c(n);  // scaling constants in the shifted domain
  Vector num = params.pi.array() * e.row(0).transpose().array();
  c(0) = num.sum();
  double loglik = 0.0;
  const double tiny = std::numeric_limits<double>::min();
  auto check_scale = [&](double v) {
    if (!(v > tiny) || !std::isfinite(v))
      throw DegenerateEmissionError("forward_backward: all emission densities vanished at a step");
  };
  check_scale(c(0));
  alpha.row(0) = num.transpose() / c(0);
  loglik += std::log(c(0)) + shift(0);

  for (Eigen::Index t = 1; t < n; ++t) {
    const Vector pred = params.a.transpose() * alpha.row(t - 1).transpose();
    num = pred.array() * e.row(t).transpose().array();
    c(t) = num.sum();
    check_scale(c(t));
    alpha.row(t) = num.transpose() / c(t);
    loglik += std::log(c(t)) + shift(t);
  }

  Matrix beta = Matrix::Zero(n, k);
  beta.row(n - 1).setOnes();
  for (Eigen::Index t = n - 2; t >= 0; --t) {
    const Vector w = (e.row(t + 1).transpose().array() * beta.row(t + 1).transpose().array());
    beta.row(t) = (params.a * w).transpose() / c(t + 1);
  }

  EStepResult r;
  r.loglik = loglik;
  r.gamma = alpha.array() * beta.array();
  r.xi.reserve(n > 0 ? n - 1 : 0);
  for (Eigen::Index t = 0; t + 1 < n; ++t) {
    Matrix xi_t(k, k);
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l)
        xi_t(j, l) = alpha(t, j) * params.a(j, l) * e(t + 1, l) * beta(t + 1, l) / c(t + 1);
    r.xi.push_back(std::move(xi_t));
  }
  return r;
}

namespace detail {

// Weighted first and second moments, shared by the plain and the composite
// state M-steps so both compute bit-identical quantities.
void weighted_moments(const Matrix& x, const Vector& w, double mass, Vector& mean,
                      Matrix& scatter) {
  mean = (x.transpose() * w) / mass;
  const Matrix xc = x.rowwise() - mean.transpose();
  Matrix m = xc.transpose() * (xc.array().colwise() * w.array()).matrix();
  m /= mass;
  scatter = 0.5 * (m + m.transpose());
}

SymMatrix solve_state_precision(const Matrix& scatter, double lambda_eff) {
  return solve_glasso(SymMatrix(scatter), lambda_eff, kInnerGlasso).theta;
}

}  // namespace detail

MStepDetail m_step_detail(const Matrix& x, const EStepResult& e, double lambda) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(e.gamma.cols());
  if (e.gamma.rows() != n) throw InputError("m_step: gamma length mismatch");
  if (static_cast<Eigen::Index>(e.xi.size()) != n - 1) throw InputError("m_step: xi length mismatch");
  if (lambda < 0) throw InputError("m_step: negative lambda");

  MStepDetail out;
  out.gamma_sum = e.gamma.colwise().sum();
  for (int j = 0; j < k; ++j)
    if (out.gamma_sum(j) < 1e-12)
      throw EmptyStateError("m_step: state " + std::to_string(j) + " has no responsibility mass", j);

  ModelParams p;
  p.pi = e.gamma.row(0) / e.gamma.row(0).sum();

  out.trans_num = Matrix::Zero(k, k);
  for (const auto& xi_t : e.xi) out.trans_num += xi_t;
  out.trans_den = out.trans_num.rowwise().sum();
  p.a.resize(k, k);
  for (int j = 0; j < k; ++j) {
    if (out.trans_den(j) > 0)
      p.a.row(j) = out.trans_num.row(j) / out.trans_den(j);
    else
      p.a.row(j).setConstant(1.0 / k);
  }

  p.means.resize(k);
  p.precisions.resize(k);
  out.s_tilde.resize(k);
  for (int j = 0; j < k; ++j) {
    Vector mean;
    Matrix scatter;
    detail::weighted_moments(x, e.gamma.col(j), out.gamma_sum(j), mean, scatter);
    p.means[j] = std::move(mean);
    out.s_tilde[j] = SymMatrix(scatter);
    p.precisions[j] = detail::solve_state_precision(scatter, lambda / out.gamma_sum(j));
  }
  out.params = std::move(p);
  return out;
}

ModelParams m_step(const Matrix& x, const EStepResult& e, double lambda) {
  return m_step_detail(x, e, lambda).params;
}

double penalized_loglik(const ModelParams& params, const Matrix& x, double lambda) {
  if (lambda < 0) throw InputError("penalized_loglik: negative lambda");
  return forward_backward(params, x).loglik - penalty_term(params, lambda);
}

IntVector labels_from_gamma(const Matrix& gamma) {
  IntVector labels(gamma.rows());
  for (Eigen::Index t = 0; t < gamma.rows(); ++t) {
    int best = 0;
    for (int j = 1; j < gamma.cols(); ++j)
      if (gamma(t, j) > gamma(t, best)) best = j;
    labels[t] = best;
  }
  return labels;
}

namespace detail {

// Shared EM driver. Returned params come from the final M-step, posteriors
// from the E-step that fed it, so stored sufficient statistics and the
// parameters they reconstruct agree exactly.
EmOutcome em_loop(const Matrix& x, ModelParams start, double lambda, double tol, int max_iter,
                  const MStepFn& mstep, const PenaltyFn& penalty) {
  EmOutcome out;
  ModelParams params = std::move(start);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    out.posteriors = forward_backward(params, x);
    const double pll = out.posteriors.loglik - penalty(params);
    if (pll < prev - 1e-6)
      throw InternalError("em: penalized loglik decreased by more than 1e-6");
    out.trace.push_back(pll);
    params = mstep(x, out.posteriors, lambda);
    if (pll - prev < tol) break;
    prev = pll;
  }
  out.params = std::move(params);
  return out;
}

}  // namespace detail

FitResult fit_em_from(const Matrix& x, const ModelParams& start, const FitConfig& cfg) {
  if (cfg.lambda < 0 || cfg.tol <= 0 || cfg.max_iter < 1) throw InputError("fit_em: bad config");
  if (x.rows() < 2) throw InputError("fit_em: need at least 2 observations");
  detail::EmOutcome o = detail::em_loop(
      x, start, cfg.lambda, cfg.tol, cfg.max_iter,
      [](const Matrix& xx, const EStepResult& e, double l) { return m_step(xx, e, l); },
      [&](const ModelParams& p) { return penalty_term(p, cfg.lambda); });
  FitResult r;
  r.params = std::move(o.params);
  r.posteriors = std::move(o.posteriors);
  r.trace = std::move(o.trace);
  r.labels = labels_from_gamma(r.posteriors.gamma);
  r.n_free_params = count_free_params(r.params);
  r.bic = bic(r.posteriors.loglik, r.n_free_params, x.rows()).score;
  return r;
}

FitResult fit_em(const Matrix& x, const FitConfig& cfg) {
  if (cfg.k < 1) throw InputError("fit_em: k must be positive");
  if (cfg.n_init < 1) throw InputError("fit_em: n_init must be positive");
  if (cfg.lambda < 0 || cfg.tol <= 0 || cfg.max_iter < 1) throw InputError("fit_em: bad config");
  if (x.rows() < 2) throw InputError("fit_em: need at least 2 observations");
  std::optional<FitResult> best;
  std::string last_error = "no restarts ran";
  for (int r = 0; r < cfg.n_init; ++r) {
    InitConfig init = cfg.init;
    init.seed = derive_seed(cfg.init.seed, static_cast<std::uint64_t>(r));
    try {
      ModelParams start = initialize(x, cfg.k, init, cfg.lambda);
      FitResult fit = fit_em_from(x, start, cfg);
      if (!best || fit.trace.back() > best->trace.back()) best = std::move(fit);
    } catch (const Error& err) {
      last_error = err.what();
    }
  }
  if (!best) throw FitError("fit_em: every restart failed, last error: " + last_error);
  return std::move(*best);
}

Vector predict_next(const ModelParams& params, const EStepResult& e) {
  validate_params(params);
  if (e.gamma.rows() < 1 || e.gamma.cols() != params.n_states())
    throw InputError("predict_next: posterior shape mismatch");
  const Vector w = params.a.transpose() * e.gamma.row(e.gamma.rows() - 1).transpose();
  Vector out = Vector::Zero(params.dim());
  for (int j = 0; j < params.n_states(); ++j) out += w(j) * params.means[j];
  return out;
}

}  // namespace tagm
