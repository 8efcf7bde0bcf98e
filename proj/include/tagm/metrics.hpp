#pragma once

#include <set>
#include <utility>

#include "tagm/hmm.hpp"

namespace tagm {

// Clustering agreement in [0, 1]: harmonic mean of homogeneity and
// completeness computed from label entropies. Conventions: homogeneity is 1
// when the truth has zero entropy, completeness is 1 when the prediction
// does, and the score is 0 when both terms vanish.
double v_measure(const IntVector& truth, const IntVector& pred);

// Contingency argmax map from predicted states to truth states; ties go to
// the lowest truth index. Not necessarily a bijection.
IntVector map_clusters(const IntVector& truth, const IntVector& pred);

using EdgeSet = std::set<std::pair<int, int>>;

// Matthews correlation between two edge sets over the strict upper triangle
// of a d-node graph; 0 when the denominator vanishes.
double mcc(const EdgeSet& truth, const EdgeSet& pred, int d);

// Edges (i, j), i < j, where |theta_ij| > threshold.
EdgeSet graph_from_precision(const SymMatrix& theta, double threshold = 1e-8);

// Mean absolute error, averaged over dimensions then over rows.
double mae(const Matrix& actual, const Matrix& predicted);

struct NetworkScore {
  double mcc_mean = 0.0;
  std::vector<double> per_state;  // one entry per predicted state
  IntVector mapping;              // predicted state -> truth state
  double coverage = 0.0;          // fraction of truth states hit by the map
};

// Maps predicted states onto truth states from the two label sequences, then
// scores each predicted precision graph against its mapped truth graph.
NetworkScore network_score(const IntVector& truth_labels,
                           const std::vector<SymMatrix>& truth_precisions,
                           const IntVector& pred_labels,
                           const std::vector<SymMatrix>& pred_precisions);

}  // namespace tagm
