#include "tagm/synthgen.hpp"

#include <algorithm>

namespace tagm {

namespace {

int sample_categorical(const Vector& p, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double target = u(rng) * p.sum();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    acc += p(j);
    if (target < acc) return static_cast<int>(j);
  }
  return static_cast<int>(p.size() - 1);
}

Vector dirichlet_row(const Vector& alpha, Rng& rng) {
  Vector out(alpha.size());
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    std::gamma_distribution<double> g(alpha(j), 1.0);
    out(j) = g(rng);
  }
  const double s = out.sum();
  if (s <= 0) return Vector::Constant(alpha.size(), 1.0 / alpha.size());
  return out / s;
}

}  // namespace

std::vector<Vector> gen_means(int k, int d, MeanMode mode, double lo, double hi, Rng& rng) {
  if (k < 1 || d < 1) throw InputError("gen_means: bad shape");
  if (mode == MeanMode::uniform && !(lo < hi)) throw InputError("gen_means: empty uniform range");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<Vector> means(k, Vector(d));
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < d; ++i)
      means[j](i) = mode == MeanMode::normal ? gauss(rng) : unif(rng);
  return means;
}

SymMatrix gen_precision_degree_bounded(int d, int max_degree, Rng& rng) {
  if (d < 2 || max_degree < 1 || max_degree >= d)
    throw InputError("gen_precision_degree_bounded: need 1 <= max_degree < d");
  Matrix theta = Matrix::Identity(d, d);
  const double w = 0.98 / max_degree;
  std::vector<int> degree(d, 0);
  for (int i = 0; i < d; ++i) {
    while (degree[i] < max_degree) {
      std::vector<int> candidates;
      for (int j = 0; j < d; ++j)
        if (j != i && degree[j] < max_degree && theta(i, j) == 0.0) candidates.push_back(j);
      if (candidates.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      const int j = candidates[pick(rng)];
      theta(i, j) = theta(j, i) = w;
      ++degree[i];
      ++degree[j];
    }
  }
  return SymMatrix(theta);
}

SymMatrix gen_precision_random_spd(int d, Rng& rng) {
  if (d < 1) throw InputError("gen_precision_random_spd: bad dimension");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = gauss(rng);
  Matrix theta = m.transpose() * m + d * 1e-3 * Matrix::Identity(d, d);
  return SymMatrix(theta);
}

SymMatrix gen_precision_stressed(int d, double edge_prob, Rng& rng) {
  if (d < 1) throw InputError("gen_precision_stressed: bad dimension");
  if (edge_prob < 0 || edge_prob > 1) throw InputError("gen_precision_stressed: bad edge_prob");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix theta = Matrix::Identity(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (u(rng) < edge_prob) theta(i, j) = theta(j, i) = 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(theta, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 1e-8) {
    for (int i = 0; i < d; ++i) {
      double row_degree = theta.row(i).sum() - theta(i, i);
      theta(i, i) = 1.0 + row_degree;
    }
  }
  return SymMatrix(theta);
}

Matrix gen_transition_matrix(int k, double kappa, Rng& rng) {
  if (k < 1) throw InputError("gen_transition_matrix: bad k");
  if (kappa <= 0) throw InputError("gen_transition_matrix: kappa must be positive");
  Matrix a(k, k);
  for (int i = 0; i < k; ++i) {
    Vector alpha = Vector::Ones(k);
    alpha(i) = kappa;
    a.row(i) = dirichlet_row(alpha, rng).transpose();
  }
  return a;
}

SyntheticDataset generate(const GeneratorConfig& cfg) {
  if (cfg.n < 1) throw InputError("generate: n must be positive");
  if (cfg.k < 1 || cfg.d < 1) throw InputError("generate: bad shape");
  if (cfg.transition == TransitionMode::fixed_smooth && cfg.smooth_steps < 1)
    throw InputError("generate: smooth_steps must be positive");
  if ((cfg.transition == TransitionMode::random_smooth ||
       cfg.transition == TransitionMode::random_smooth_random_weights) &&
      !(cfg.smooth_lo >= 1 && cfg.smooth_lo <= cfg.smooth_hi))
    throw InputError("generate: need 1 <= smooth_lo <= smooth_hi");

  Rng rng(cfg.seed);
  const int k = cfg.k, d = cfg.d;

  SyntheticDataset out;
  out.truth.means = gen_means(k, d, cfg.mean_mode, cfg.mean_lo, cfg.mean_hi, rng);
  out.truth.precisions.reserve(k);
  for (int j = 0; j < k; ++j) {
    switch (cfg.cov_mode) {
      case CovMode::degree_bounded:
        out.truth.precisions.push_back(gen_precision_degree_bounded(d, cfg.max_degree, rng));
        break;
      case CovMode::random_spd:
        out.truth.precisions.push_back(gen_precision_random_spd(d, rng));
        break;
      case CovMode::stressed:
        out.truth.precisions.push_back(gen_precision_stressed(d, cfg.edge_prob, rng));
        break;
    }
  }
  out.truth.sigmas.reserve(k);
  std::vector<Matrix> chol(k);
  for (int j = 0; j < k; ++j) {
    Eigen::LLT<Matrix> llt(out.truth.precisions[j].mat());
    if (llt.info() != Eigen::Success) throw InternalError("generate: precision not PD");
    Matrix sigma = llt.solve(Matrix::Identity(d, d));
    sigma = 0.5 * (sigma + sigma.transpose());
    out.truth.sigmas.push_back(sigma);
    chol[j] = Eigen::LLT<Matrix>(out.truth.sigmas[j]).matrixL();
  }
  out.truth.a = gen_transition_matrix(k, cfg.kappa, rng);
  out.truth.pi = Vector::Constant(k, 1.0 / k);

  out.x.resize(cfg.n, d);
  out.weights.resize(cfg.n, k);
  out.labels.resize(cfg.n);

  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool sudden = cfg.transition == TransitionMode::sudden;
  const bool random_weights = cfg.transition == TransitionMode::random_smooth_random_weights;

  // Blend bookkeeping: travelling from the blend at transition start toward
  // the newest chain state over s_total steps.
  int state = sample_categorical(out.truth.pi, rng);
  int target = state;
  Vector w_start = Vector::Zero(k);
  w_start(state) = 1.0;
  Vector w = w_start;
  int s_done = 1, s_total = 1;

  for (long n = 0; n < cfg.n; ++n) {
    if (n > 0) {
      state = sample_categorical(out.truth.a.row(state).transpose(), rng);
      if (sudden) {
        target = state;
        w.setZero();
        w(target) = 1.0;
      } else {
        if (state != target) {
          w_start = w;
          target = state;
          s_done = 0;
          if (cfg.transition == TransitionMode::fixed_smooth) {
            s_total = cfg.smooth_steps;
          } else {
            std::uniform_int_distribution<int> dur(cfg.smooth_lo, cfg.smooth_hi);
            s_total = dur(rng);
          }
        }
        s_done = std::min(s_done + 1, s_total);
        const double frac = static_cast<double>(s_done) / s_total;
        w = (1.0 - frac) * w_start;
        w(target) += frac;
        if (random_weights) {
          std::vector<int> active;
          for (int j = 0; j < k; ++j)
            if (w(j) > 0) active.push_back(j);
          if (active.size() > 1) {
            Vector aw = dirichlet_row(Vector::Ones(static_cast<int>(active.size())), rng);
            w.setZero();
            for (std::size_t idx = 0; idx < active.size(); ++idx) w(active[idx]) = aw(idx);
          }
        }
      }
    }

    out.weights.row(n) = w.transpose();
    const double top = w.maxCoeff();
    int label = target;
    if (w(target) != top) {
      label = 0;
      for (int j = 1; j < k; ++j)
        if (w(j) > w(label)) label = j;
    }
    out.labels[n] = label;

    Vector mu = Vector::Zero(d);
    Vector z(d);
    for (int i = 0; i < d; ++i) z(i) = gauss(rng);
    if (w(target) == 1.0) {
      mu = out.truth.means[target];
      out.x.row(n) = (mu + chol[target] * z).transpose();
    } else {
      Matrix sigma = Matrix::Zero(d, d);
      for (int j = 0; j < k; ++j) {
        if (w(j) == 0) continue;
        mu += w(j) * out.truth.means[j];
        sigma += w(j) * out.truth.sigmas[j];
      }
      const Matrix l = Eigen::LLT<Matrix>(sigma).matrixL();
      out.x.row(n) = (mu + l * z).transpose();
    }
  }
  return out;
}

}  // namespace tagm
