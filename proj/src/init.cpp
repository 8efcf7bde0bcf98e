#include <algorithm>

#include "tagm/detail.hpp"
#include "tagm/hmm.hpp"
#include "tagm/rng.hpp"

namespace tagm {

namespace {

// k-means++ seeding: iterative squared-distance weighted draws.
std::vector<Vector> seed_centers(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Vector> centers;
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.push_back(x.row(first(rng)).transpose());
  Vector d2 = (x.rowwise() - centers[0].transpose()).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.push_back(x.row(pick).transpose());
    d2 = d2.cwiseMin((x.rowwise() - centers.back().transpose()).rowwise().squaredNorm());
  }
  return centers;
}

IntVector kmeans_labels(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Vector> centers = seed_centers(x, k, rng);
  IntVector labels(n, 0);
  for (int pass = 0; pass < 100; ++pass) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i).transpose() - centers[0]).squaredNorm();
      for (int j = 1; j < k; ++j) {
        const double dj = (x.row(i).transpose() - centers[j]).squaredNorm();
        if (dj < best_d) {
          best_d = dj;
          best = j;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    std::vector<Vector> sums(k, Vector::Zero(x.cols()));
    std::vector<long> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums[labels[i]] += x.row(i).transpose();
      ++counts[labels[i]];
    }
    for (int j = 0; j < k; ++j)
      if (counts[j] > 0) centers[j] = sums[j] / static_cast<double>(counts[j]);
    if (!changed) break;
  }
  return labels;
}

// Diagonal covariance mixture, fixed iteration budget, hard labels at the end.
IntVector gmm_labels(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  std::vector<Vector> means = seed_centers(x, k, rng);
  const Vector global_mean = x.colwise().mean().transpose();
  Vector global_var =
      ((x.rowwise() - global_mean.transpose()).array().square().colwise().sum() / double(n))
          .transpose();
  global_var = global_var.cwiseMax(1e-6);
  std::vector<Vector> vars(k, global_var);
  Vector weights = Vector::Constant(k, 1.0 / k);

  Matrix resp(n, k);
  for (int pass = 0; pass < 50; ++pass) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector logp(k);
      for (int j = 0; j < k; ++j) {
        const auto xc = (x.row(i).transpose() - means[j]).array();
        logp(j) = std::log(weights(j)) -
                  0.5 * (vars[j].array().log() + xc.square() / vars[j].array()).sum();
      }
      const double m = logp.maxCoeff();
      Vector p = (logp.array() - m).exp();
      resp.row(i) = p.transpose() / p.sum();
    }
    for (int j = 0; j < k; ++j) {
      const double mass = resp.col(j).sum();
      if (mass < 1e-12) continue;
      means[j] = (x.transpose() * resp.col(j)) / mass;
      const Matrix xc = x.rowwise() - means[j].transpose();
      vars[j] = ((xc.array().square().colwise() * resp.col(j).array()).colwise().sum() / mass)
                    .transpose()
                    .cwiseMax(1e-6);
    }
    (void)d;
  }
  return labels_from_gamma(resp);
}

}  // namespace

ModelParams initialize(const Matrix& x, int k, const InitConfig& cfg, double lambda) {
  const Eigen::Index n = x.rows();
  if (k < 1) throw InputError("initialize: k must be positive");
  if (n < k) throw InputError("initialize: fewer observations than states");
  if (lambda < 0) throw InputError("initialize: negative lambda");

  for (int attempt = 0; attempt < 10; ++attempt) {
    Rng rng(attempt == 0 ? cfg.seed : derive_seed(cfg.seed, 0xA77E0000ULL + attempt));
    IntVector labels = cfg.cluster == InitConfig::Cluster::kmeans ? kmeans_labels(x, k, rng)
                                                                  : gmm_labels(x, k, rng);
    std::vector<long> counts(k, 0);
    for (int l : labels) ++counts[l];
    if (std::any_of(counts.begin(), counts.end(), [](long c) { return c == 0; })) continue;

    ModelParams p;
    p.means.resize(k);
    p.precisions.resize(k);
    for (int j = 0; j < k; ++j) {
      Vector w = Vector::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i)
        if (labels[i] == j) w(i) = 1.0;
      Vector mean;
      Matrix scatter;
      detail::weighted_moments(x, w, static_cast<double>(counts[j]), mean, scatter);
      p.means[j] = std::move(mean);
      p.precisions[j] = detail::solve_state_precision(scatter, lambda / counts[j]);
    }

    switch (cfg.chain) {
      case InitConfig::Chain::uniform:
        p.pi = Vector::Constant(k, 1.0 / k);
        p.a = Matrix::Constant(k, k, 1.0 / k);
        break;
      case InitConfig::Chain::random_uniform: {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        p.pi.resize(k);
        for (int j = 0; j < k; ++j) p.pi(j) = u(rng);
        p.pi /= p.pi.sum();
        p.a.resize(k, k);
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) p.a(i, j) = u(rng);
          p.a.row(i) /= p.a.row(i).sum();
        }
        break;
      }
      case InitConfig::Chain::dirichlet: {
        std::gamma_distribution<double> g(1.0, 1.0);
        p.pi.resize(k);
        for (int j = 0; j < k; ++j) p.pi(j) = g(rng);
        p.pi /= p.pi.sum();
        p.a.resize(k, k);
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) p.a(i, j) = g(rng);
          p.a.row(i) /= p.a.row(i).sum();
        }
        break;
      }
    }
    return p;
  }
  throw FitError("initialize: clustering produced an empty cluster in every attempt");
}

}  // namespace tagm
