#pragma once

#include <deque>

#include "tagm/hmm.hpp"

namespace tagm {

// ---- higher order memory ----

struct MemConfig {
  int r = 1;  // chain order
  int m = 1;  // emission order
  int nu() const { return r > m ? r : m; }
};

// Composite state code for digits [z_n, z_{n-1}, ...], newest first, newest
// most significant: code = sum_t digits[t] * K^(nu-1-t).
int encode_state(const IntVector& digits, int k);
IntVector decode_state(int code, int k, int nu);

// A composite transition i -> j is allowed iff dropping i's oldest digit
// leaves j's history digits: floor(i / K) == j mod K^(nu-1).
bool transition_allowed(int i, int j, int k, int nu);

// Composite states sharing i's leading `order` digits: a contiguous block of
// K^(nu-order) codes.
IntVector index_set(int i, int k, int nu, int order);

// EM over K^nu composite states with transition structural zeros, chain
// statistics aggregated over order-r blocks and emission statistics over
// order-m blocks. Returned params hold the composite states; labels are base
// state labels (leading digit of the argmax composite state). At r = m = 1
// this reproduces fit_em exactly. Guard: K^nu <= 10000.
FitResult mem_fit(const Matrix& x, const FitConfig& cfg, const MemConfig& mem);

// ---- incremental updates ----

struct IncConfig {
  int refit_stride = 1;  // graphical lasso refit cadence, in updates
};

// Per-step contribution retained for sliding windows: the filtered posterior,
// the observation, the pair posterior of the incoming transition and its row
// sums (the transition denominator increment).
struct StepContribution {
  Vector x;
  Vector gamma;
  Matrix xi;
  Vector gamma_rev;
};

struct IncState {
  ModelParams params;  // pi frozen after init
  double lambda = 0.0;
  int refit_stride = 1;
  long t = 0;        // observations consumed
  long updates = 0;  // online updates applied
  Vector last_gamma;
  Matrix trans_num;
  Vector trans_den;
  Vector gamma_sum;
  std::vector<Matrix> s_tilde;
  std::deque<StepContribution> window;
};

struct IncStepRecord {
  long t = 0;  // index of the consumed observation, 0 based
  Vector gamma;
  int label = 0;
  Vector prediction;  // one step ahead forecast after the update
  bool refit = false;
};

// Batch fit followed by sufficient statistic extraction. The stored sums
// reconstruct the fitted parameters exactly.
IncState inc_init(const Matrix& x_batch, const FitConfig& cfg, const IncConfig& inc = {});

// One online EM step under the constant-backward approximation: gamma is the
// filtered posterior, transition statistics accumulate the one step pair
// posterior, means and scatters follow their convex recursions, precisions
// refit on the configured stride. pi stays frozen.
IncStepRecord inc_update(IncState& state, const Vector& x_new);

// Same update over a simple moving window of the last `window` steps; with
// more window than history it reduces to inc_update (warm-up).
IncStepRecord slide_update(IncState& state, const Vector& x_new, int window);

}  // namespace tagm
