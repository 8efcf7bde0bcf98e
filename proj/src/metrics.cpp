#include "tagm/metrics.hpp"

#include <cmath>

namespace tagm {

namespace {

struct Contingency {
  Matrix counts;  // truth x pred
  long total = 0;
};

Contingency contingency(const IntVector& truth, const IntVector& pred) {
  if (truth.size() != pred.size()) throw InputError("labels: length mismatch");
  if (truth.empty()) throw InputError("labels: empty");
  int tmax = 0, pmax = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || pred[i] < 0) throw InputError("labels: negative label");
    tmax = std::max(tmax, truth[i]);
    pmax = std::max(pmax, pred[i]);
  }
  Contingency c;
  c.counts = Matrix::Zero(tmax + 1, pmax + 1);
  for (std::size_t i = 0; i < truth.size(); ++i) c.counts(truth[i], pred[i]) += 1.0;
  c.total = static_cast<long>(truth.size());
  return c;
}

double entropy(const Vector& counts, double total) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i)
    if (counts(i) > 0) h -= counts(i) / total * std::log(counts(i) / total);
  return h;
}

}  // namespace

double v_measure(const IntVector& truth, const IntVector& pred) {
  const Contingency c = contingency(truth, pred);
  const double n = static_cast<double>(c.total);
  const Vector row_sums = c.counts.rowwise().sum();  // per truth class
  const Vector col_sums = c.counts.colwise().sum();  // per predicted cluster
  const double h_truth = entropy(row_sums, n);
  const double h_pred = entropy(col_sums, n);

  // conditional entropies from the joint
  double h_truth_given_pred = 0.0, h_pred_given_truth = 0.0;
  for (Eigen::Index i = 0; i < c.counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.counts.cols(); ++j) {
      const double nij = c.counts(i, j);
      if (nij <= 0) continue;
      h_truth_given_pred -= nij / n * std::log(nij / col_sums(j));
      h_pred_given_truth -= nij / n * std::log(nij / row_sums(i));
    }
  }

  const double homogeneity = h_truth > 0 ? 1.0 - h_truth_given_pred / h_truth : 1.0;
  const double completeness = h_pred > 0 ? 1.0 - h_pred_given_truth / h_pred : 1.0;
  if (homogeneity + completeness == 0) return 0.0;
  return 2.0 * homogeneity * completeness / (homogeneity + completeness);
}

IntVector map_clusters(const IntVector& truth, const IntVector& pred) {
  const Contingency c = contingency(truth, pred);
  IntVector mapping(c.counts.cols());
  for (Eigen::Index j = 0; j < c.counts.cols(); ++j) {
    int best = 0;
    for (Eigen::Index i = 1; i < c.counts.rows(); ++i)
      if (c.counts(i, j) > c.counts(best, j)) best = static_cast<int>(i);
    mapping[j] = best;
  }
  return mapping;
}

double mcc(const EdgeSet& truth, const EdgeSet& pred, int d) {
  if (d < 2) throw InputError("mcc: need at least 2 nodes");
  for (const auto& s : {truth, pred})
    for (const auto& [i, j] : s)
      if (i < 0 || j <= i || j >= d) throw InputError("mcc: edge outside the strict upper triangle");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const bool t = truth.count({i, j}) > 0;
      const bool p = pred.count({i, j}) > 0;
      if (t && p) ++tp;
      else if (!t && !p) ++tn;
      else if (!t && p) ++fp;
      else ++fn;
    }
  }
  const double denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  if (denom == 0) return 0.0;
  return (tp * tn - fp * fn) / denom;
}

EdgeSet graph_from_precision(const SymMatrix& theta, double threshold) {
  EdgeSet edges;
  for (Eigen::Index i = 0; i < theta.dim(); ++i)
    for (Eigen::Index j = i + 1; j < theta.dim(); ++j)
      if (std::abs(theta(i, j)) > threshold)
        edges.insert({static_cast<int>(i), static_cast<int>(j)});
  return edges;
}

double mae(const Matrix& actual, const Matrix& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols())
    throw InputError("mae: shape mismatch");
  if (actual.rows() == 0 || actual.cols() == 0) throw InputError("mae: empty input");
  return (actual - predicted).cwiseAbs().rowwise().mean().mean();
}

NetworkScore network_score(const IntVector& truth_labels,
                           const std::vector<SymMatrix>& truth_precisions,
                           const IntVector& pred_labels,
                           const std::vector<SymMatrix>& pred_precisions) {
  if (truth_precisions.empty() || pred_precisions.empty())
    throw InputError("network_score: no precisions");
  const int d = static_cast<int>(truth_precisions[0].dim());
  NetworkScore out;
  out.mapping = map_clusters(truth_labels, pred_labels);
  // the contingency can be narrower than the parameter list when trailing
  // predicted states never appear in the labels; those map to truth state 0
  out.mapping.resize(pred_precisions.size(), 0);
  std::vector<EdgeSet> truth_graphs;
  truth_graphs.reserve(truth_precisions.size());
  for (const auto& t : truth_precisions) truth_graphs.push_back(graph_from_precision(t));

  std::set<int> covered;
  for (std::size_t p = 0; p < pred_precisions.size(); ++p) {
    const int m = out.mapping[p];
    if (m >= static_cast<int>(truth_graphs.size()))
      throw InputError("network_score: mapped truth state out of range");
    covered.insert(m);
    out.per_state.push_back(mcc(truth_graphs[m], graph_from_precision(pred_precisions[p]), d));
  }
  out.coverage = static_cast<double>(covered.size()) / truth_precisions.size();
  double s = 0.0;
  for (double v : out.per_state) s += v;
  out.mcc_mean = s / out.per_state.size();
  return out;
}

}  // namespace tagm
