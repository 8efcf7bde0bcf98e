#include "tagm/extensions.hpp"

#include <cmath>
#include <optional>

#include "tagm/detail.hpp"
#include "tagm/model_selection.hpp"
#include "tagm/rng.hpp"

namespace tagm {

namespace {

long ipow(int base, int exp) {
  long p = 1;
  for (int i = 0; i < exp; ++i) {
    p *= base;
    if (p > 1000000) return p;  // callers guard the real bound
  }
  return p;
}

void check_composite(int k, int nu) {
  if (k < 1) throw InputError("composite states: k must be positive");
  if (nu < 1) throw InputError("composite states: order must be positive");
  if (ipow(k, nu) > 10000) throw InputError("composite states: k^nu exceeds 10000");
}

}  // namespace

int encode_state(const IntVector& digits, int k) {
  const int nu = static_cast<int>(digits.size());
  check_composite(k, nu);
  long code = 0;
  for (int t = 0; t < nu; ++t) {
    if (digits[t] < 0 || digits[t] >= k) throw InputError("encode_state: digit out of range");
    code = code * k + digits[t];
  }
  return static_cast<int>(code);
}

IntVector decode_state(int code, int k, int nu) {
  check_composite(k, nu);
  if (code < 0 || code >= ipow(k, nu)) throw InputError("decode_state: code out of range");
  IntVector digits(nu);
  for (int t = nu - 1; t >= 0; --t) {
    digits[t] = code % k;
    code /= k;
  }
  return digits;
}

bool transition_allowed(int i, int j, int k, int nu) {
  check_composite(k, nu);
  const long total = ipow(k, nu);
  if (i < 0 || i >= total || j < 0 || j >= total)
    throw InputError("transition_allowed: code out of range");
  if (nu == 1) return true;
  // dropping i's oldest digit must leave j's history digits
  return i / k == j % ipow(k, nu - 1);
}

IntVector index_set(int i, int k, int nu, int order) {
  check_composite(k, nu);
  if (order < 1 || order > nu) throw InputError("index_set: order out of range");
  if (i < 0 || i >= ipow(k, nu)) throw InputError("index_set: code out of range");
  const long bs = ipow(k, nu - order);
  const long start = (i / bs) * bs;
  IntVector out;
  out.reserve(bs);
  for (long c = start; c < start + bs; ++c) out.push_back(static_cast<int>(c));
  return out;
}

namespace {

// Base params shared across composite states with the same newest digit;
// transitions carry the structural zero pattern from the start.
ModelParams lift_params(const ModelParams& base, int k, int nu) {
  if (nu == 1) return base;
  const int kc = static_cast<int>(ipow(k, nu));
  const int lead = static_cast<int>(ipow(k, nu - 1));
  ModelParams p;
  p.pi.resize(kc);
  p.a = Matrix::Zero(kc, kc);
  p.means.resize(kc);
  p.precisions.resize(kc);
  for (int i = 0; i < kc; ++i) {
    const int di = i / lead;
    p.pi(i) = base.pi(di) / lead;
    p.means[i] = base.means[di];
    p.precisions[i] = base.precisions[di];
    for (int j = 0; j < kc; ++j)
      if (i / k == j % lead) p.a(i, j) = base.a(di, j / lead);
  }
  return p;
}

struct MemLayout {
  int k = 0, nu = 0, kc = 0;
  int r_block = 0;  // states per chain block, k^(nu-r)
  int m_block = 0;  // states per emission block, k^(nu-m)
  int lead = 0;     // k^(nu-1)
};

// Modified M-step: pair posteriors aggregate over order-r blocks for the
// transitions, responsibilities over order-m blocks for the moments.
ModelParams mem_m_step(const Matrix& x, const EStepResult& e, double lambda, const MemLayout& lay) {
  const Eigen::Index n = x.rows();
  const int kc = lay.kc;
  if (e.gamma.cols() != kc || e.gamma.rows() != n) throw InputError("mem m-step: shape mismatch");

  const Vector gamma_sum = e.gamma.colwise().sum();
  const int n_eblocks = kc / lay.m_block;
  Vector block_mass(n_eblocks);
  for (int b = 0; b < n_eblocks; ++b) {
    double mass = gamma_sum(b * lay.m_block);
    for (int o = 1; o < lay.m_block; ++o) mass += gamma_sum(b * lay.m_block + o);
    block_mass(b) = mass;
    if (mass < 1e-12)
      throw EmptyStateError(
          "mem m-step: emission block " + std::to_string(b) + " has no responsibility mass", b);
  }

  ModelParams p;
  p.pi = e.gamma.row(0) / e.gamma.row(0).sum();

  Matrix xi_sum = Matrix::Zero(kc, kc);
  for (const auto& xi_t : e.xi) xi_sum += xi_t;

  const int n_rblocks = kc / lay.r_block;
  p.a = Matrix::Zero(kc, kc);
  for (int b = 0; b < n_rblocks; ++b) {
    double den = 0.0;
    for (int o = 0; o < lay.r_block; ++o) den += xi_sum.row(b * lay.r_block + o).sum();
    Vector num = Vector::Zero(lay.k);
    for (int o = 0; o < lay.r_block; ++o) {
      const int state = b * lay.r_block + o;
      for (int nd = 0; nd < lay.k; ++nd) num(nd) += xi_sum(state, nd * lay.lead + state / lay.k);
    }
    for (int o = 0; o < lay.r_block; ++o) {
      const int i = b * lay.r_block + o;
      for (int nd = 0; nd < lay.k; ++nd) {
        const int j = nd * lay.lead + i / lay.k;
        p.a(i, j) = den > 0 ? num(nd) / den : 1.0 / lay.k;
      }
    }
  }

  p.means.resize(kc);
  p.precisions.resize(kc);
  for (int b = 0; b < n_eblocks; ++b) {
    Vector w = e.gamma.col(b * lay.m_block);
    for (int o = 1; o < lay.m_block; ++o) w += e.gamma.col(b * lay.m_block + o);
    Vector mean;
    Matrix scatter;
    detail::weighted_moments(x, w, block_mass(b), mean, scatter);
    const SymMatrix theta = detail::solve_state_precision(scatter, lambda / block_mass(b));
    for (int o = 0; o < lay.m_block; ++o) {
      p.means[b * lay.m_block + o] = mean;
      p.precisions[b * lay.m_block + o] = theta;
    }
  }
  return p;
}

double mem_penalty(const ModelParams& p, double lambda, const MemLayout& lay) {
  double s = 0.0;
  for (int b = 0; b * lay.m_block < lay.kc; ++b) {
    const Matrix& t = p.precisions[b * lay.m_block].mat();
    s += t.cwiseAbs().sum() - t.diagonal().cwiseAbs().sum();
  }
  return 0.5 * lambda * s;
}

}  // namespace

FitResult mem_fit(const Matrix& x, const FitConfig& cfg, const MemConfig& mem) {
  if (mem.r < 1 || mem.m < 1) throw InputError("mem_fit: orders must be positive");
  if (cfg.k < 1) throw InputError("mem_fit: k must be positive");
  if (cfg.n_init < 1) throw InputError("mem_fit: n_init must be positive");
  if (cfg.lambda < 0 || cfg.tol <= 0 || cfg.max_iter < 1) throw InputError("mem_fit: bad config");
  if (x.rows() < 2) throw InputError("mem_fit: need at least 2 observations");
  const int nu = mem.nu();
  check_composite(cfg.k, nu);

  MemLayout lay;
  lay.k = cfg.k;
  lay.nu = nu;
  lay.kc = static_cast<int>(ipow(cfg.k, nu));
  lay.r_block = static_cast<int>(ipow(cfg.k, nu - mem.r));
  lay.m_block = static_cast<int>(ipow(cfg.k, nu - mem.m));
  lay.lead = static_cast<int>(ipow(cfg.k, nu - 1));

  std::optional<detail::EmOutcome> best;
  std::string last_error = "no restarts ran";
  for (int r = 0; r < cfg.n_init; ++r) {
    InitConfig init = cfg.init;
    init.seed = derive_seed(cfg.init.seed, static_cast<std::uint64_t>(r));
    try {
      ModelParams base = initialize(x, cfg.k, init, cfg.lambda);
      detail::EmOutcome o = detail::em_loop(
          x, lift_params(base, cfg.k, nu), cfg.lambda, cfg.tol, cfg.max_iter,
          [&lay](const Matrix& xx, const EStepResult& e, double l) {
            return mem_m_step(xx, e, l, lay);
          },
          [&](const ModelParams& p) { return mem_penalty(p, cfg.lambda, lay); });
      if (!best || o.trace.back() > best->trace.back()) best = std::move(o);
    } catch (const Error& err) {
      last_error = err.what();
    }
  }
  if (!best) throw FitError("mem_fit: every restart failed, last error: " + last_error);

  FitResult r;
  r.params = std::move(best->params);
  r.posteriors = std::move(best->posteriors);
  r.trace = std::move(best->trace);
  const IntVector composite = labels_from_gamma(r.posteriors.gamma);
  r.labels.reserve(composite.size());
  for (int c : composite) r.labels.push_back(c / lay.lead);
  r.n_free_params = count_free_params(r.params);
  r.bic = bic(r.posteriors.loglik, r.n_free_params, x.rows()).score;
  return r;
}

// ---- incremental ----

IncState inc_init(const Matrix& x_batch, const FitConfig& cfg, const IncConfig& inc) {
  if (inc.refit_stride < 1) throw InputError("inc_init: refit_stride must be positive");
  FitResult fit = fit_em(x_batch, cfg);
  // the detail recomputation reproduces fit.params bit for bit and hands us
  // the running sums the online recursions continue from
  MStepDetail det = m_step_detail(x_batch, fit.posteriors, cfg.lambda);

  IncState s;
  s.params = std::move(fit.params);
  s.lambda = cfg.lambda;
  s.refit_stride = inc.refit_stride;
  s.t = x_batch.rows();
  s.updates = 0;
  s.last_gamma = fit.posteriors.gamma.row(x_batch.rows() - 1).transpose();
  s.trans_num = std::move(det.trans_num);
  s.trans_den = std::move(det.trans_den);
  s.gamma_sum = std::move(det.gamma_sum);
  s.s_tilde.reserve(det.s_tilde.size());
  for (const auto& st : det.s_tilde) s.s_tilde.push_back(st.mat());

  const int k = s.params.n_states();
  for (Eigen::Index t = 0; t < x_batch.rows(); ++t) {
    StepContribution c;
    c.x = x_batch.row(t).transpose();
    c.gamma = fit.posteriors.gamma.row(t).transpose();
    if (t == 0) {
      c.xi = Matrix::Zero(k, k);
      c.gamma_rev = Vector::Zero(k);
    } else {
      c.xi = fit.posteriors.xi[t - 1];
      c.gamma_rev = c.xi.rowwise().sum();
    }
    s.window.push_back(std::move(c));
  }
  return s;
}

namespace {

IncStepRecord update_impl(IncState& s, const Vector& x_new, std::optional<long> window) {
  const int k = s.params.n_states();
  const int d = s.params.dim();
  if (x_new.size() != d) throw InputError("update: observation dimension mismatch");
  if (!x_new.allFinite()) throw InputError("update: non-finite observation");
  if (window && *window < 1) throw InputError("update: window must be positive");

  Vector loge(k);
  for (int j = 0; j < k; ++j)
    loge(j) = log_emission(x_new, s.params.means[j], s.params.precisions[j]);
  const double shift = loge.maxCoeff();
  const Vector e = (loge.array() - shift).exp();
  const Vector pred = s.params.a.transpose() * s.last_gamma;
  const Vector num = e.array() * pred.array();
  const double c = num.sum();
  if (!(c > std::numeric_limits<double>::min()) || !std::isfinite(c))
    throw DegenerateEmissionError("update: all emission densities vanished");
  const Vector gamma_new = num / c;

  Matrix xi(k, k);
  for (int j = 0; j < k; ++j)
    for (int l = 0; l < k; ++l) xi(j, l) = s.last_gamma(j) * s.params.a(j, l) * e(l) / c;
  const Vector gamma_rev = xi.rowwise().sum();

  s.window.push_back({x_new, gamma_new, xi, gamma_rev});

  bool evicted = false;
  if (window && static_cast<long>(s.window.size()) > *window) {
    while (static_cast<long>(s.window.size()) > *window) s.window.pop_front();
    evicted = true;
  }

  if (!evicted) {
    // convex recursions over the full history
    s.trans_num += xi;
    s.trans_den += gamma_rev;
    for (int j = 0; j < k; ++j) {
      const double den_old = s.gamma_sum(j);
      const double den_new = den_old + gamma_new(j);
      const Vector mu_new =
          den_old / den_new * s.params.means[j] + gamma_new(j) / den_new * x_new;
      const Vector xc = x_new - mu_new;
      s.s_tilde[j] =
          den_old / den_new * s.s_tilde[j] + gamma_new(j) / den_new * (xc * xc.transpose());
      s.params.means[j] = mu_new;
      s.gamma_sum(j) = den_new;
    }
  } else {
    // window contents changed: recompute every aggregate exactly
    s.trans_num.setZero();
    s.trans_den.setZero();
    s.gamma_sum.setZero();
    Matrix mean_num = Matrix::Zero(d, k);
    std::vector<Matrix> sq(k, Matrix::Zero(d, d));
    for (const auto& st : s.window) {
      s.trans_num += st.xi;
      s.trans_den += st.gamma_rev;
      s.gamma_sum += st.gamma;
      for (int j = 0; j < k; ++j) {
        if (st.gamma(j) == 0) continue;
        mean_num.col(j) += st.gamma(j) * st.x;
        sq[j] += st.gamma(j) * (st.x * st.x.transpose());
      }
    }
    for (int j = 0; j < k; ++j) {
      if (s.gamma_sum(j) < 1e-12) continue;  // dormant in this window, keep old moments
      s.params.means[j] = mean_num.col(j) / s.gamma_sum(j);
      Matrix st = sq[j] / s.gamma_sum(j) -
                  s.params.means[j] * s.params.means[j].transpose();
      s.s_tilde[j] = 0.5 * (st + st.transpose());
    }
  }

  for (int j = 0; j < k; ++j)
    if (s.trans_den(j) > 0) s.params.a.row(j) = s.trans_num.row(j) / s.trans_den(j);

  s.t += 1;
  s.updates += 1;
  s.last_gamma = gamma_new;

  IncStepRecord rec;
  rec.t = s.t - 1;
  rec.gamma = gamma_new;
  rec.label = 0;
  for (int j = 1; j < k; ++j)
    if (gamma_new(j) > gamma_new(rec.label)) rec.label = j;
  rec.refit = s.updates % s.refit_stride == 0;
  if (rec.refit) {
    for (int j = 0; j < k; ++j) {
      if (s.gamma_sum(j) < 1e-12) continue;
      s.params.precisions[j] =
          detail::solve_state_precision(s.s_tilde[j], s.lambda / s.gamma_sum(j));
    }
  }
  const Vector w = s.params.a.transpose() * gamma_new;
  rec.prediction = Vector::Zero(d);
  for (int j = 0; j < k; ++j) rec.prediction += w(j) * s.params.means[j];
  return rec;
}

}  // namespace

IncStepRecord inc_update(IncState& state, const Vector& x_new) {
  return update_impl(state, x_new, std::nullopt);
}

IncStepRecord slide_update(IncState& state, const Vector& x_new, int window) {
  return update_impl(state, x_new, static_cast<long>(window));
}

}  // namespace tagm
