#pragma once

#include <functional>

#include "tagm/hmm.hpp"

namespace tagm::detail {

// Internals shared between the plain fit and the composite state fit. Both
// run the same EM driver and the same moment arithmetic so the composite
// model at memory order 1 reproduces the plain fit exactly.

struct EmOutcome {
  ModelParams params;
  EStepResult posteriors;
  std::vector<double> trace;
};

using MStepFn = std::function<ModelParams(const Matrix&, const EStepResult&, double)>;
using PenaltyFn = std::function<double(const ModelParams&)>;

EmOutcome em_loop(const Matrix& x, ModelParams start, double lambda, double tol, int max_iter,
                  const MStepFn& mstep, const PenaltyFn& penalty);

void weighted_moments(const Matrix& x, const Vector& w, double mass, Vector& mean, Matrix& scatter);

SymMatrix solve_state_precision(const Matrix& scatter, double lambda_eff);

}  // namespace tagm::detail
