#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "tagm/extensions.hpp"
#include "tagm/glasso.hpp"
#include "tagm/hmm.hpp"
#include "tagm/io.hpp"
#include "tagm/metrics.hpp"
#include "tagm/model_selection.hpp"
#include "tagm/synthgen.hpp"

namespace py = pybind11;
using namespace tagm;

namespace {

std::vector<Matrix> unwrap(const std::vector<SymMatrix>& ms) {
  std::vector<Matrix> out;
  out.reserve(ms.size());
  for (const SymMatrix& m : ms) out.push_back(m.mat());
  return out;
}

InitConfig::Cluster parse_cluster(const std::string& s) {
  if (s == "kmeans") return InitConfig::Cluster::kmeans;
  if (s == "gmm") return InitConfig::Cluster::gmm;
  throw InputError("init must be kmeans or gmm, got " + s);
}

InitConfig::Chain parse_chain(const std::string& s) {
  if (s == "uniform") return InitConfig::Chain::uniform;
  if (s == "random_uniform") return InitConfig::Chain::random_uniform;
  if (s == "dirichlet") return InitConfig::Chain::dirichlet;
  throw InputError("chain must be uniform, random_uniform or dirichlet, got " + s);
}

FitConfig make_fit_config(int k, double lam, double tol, int max_iter, int n_init,
                          const std::string& init, const std::string& chain,
                          std::uint64_t seed) {
  FitConfig fc;
  fc.k = k;
  fc.lambda = lam;
  fc.tol = tol;
  fc.max_iter = max_iter;
  fc.n_init = n_init;
  fc.init.cluster = parse_cluster(init);
  fc.init.chain = parse_chain(chain);
  fc.init.seed = seed;
  return fc;
}

MeanMode parse_mean(const std::string& s) {
  if (s == "normal") return MeanMode::normal;
  if (s == "uniform") return MeanMode::uniform;
  throw InputError("mean mode must be normal or uniform, got " + s);
}

CovMode parse_cov(const std::string& s) {
  if (s == "degree_bounded") return CovMode::degree_bounded;
  if (s == "random_spd") return CovMode::random_spd;
  if (s == "stressed") return CovMode::stressed;
  throw InputError("cov mode must be degree_bounded, random_spd or stressed, got " + s);
}

TransitionMode parse_transition(const std::string& s) {
  if (s == "sudden") return TransitionMode::sudden;
  if (s == "fixed_smooth") return TransitionMode::fixed_smooth;
  if (s == "random_smooth") return TransitionMode::random_smooth;
  if (s == "random_smooth_random_weights") return TransitionMode::random_smooth_random_weights;
  throw InputError("unknown transition mode " + s);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HMM time series clustering with sparse Gaussian graphical emissions";
  m.attr("__version__") = TAGM_VERSION;

  // translators run newest first, so the base class goes in before the derived
  py::register_exception<Error>(m, "ModelError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("pi", &ModelParams::pi)
      .def_readonly("a", &ModelParams::a)
      .def_readonly("means", &ModelParams::means)
      .def_property_readonly(
          "precisions", [](const ModelParams& p) { return unwrap(p.precisions); })
      .def_property_readonly("n_states", &ModelParams::n_states)
      .def_property_readonly("dim", &ModelParams::dim);

  py::class_<EStepResult>(m, "EStepResult")
      .def_readonly("gamma", &EStepResult::gamma)
      .def_readonly("xi", &EStepResult::xi)
      .def_readonly("loglik", &EStepResult::loglik);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("trace", &FitResult::trace)
      .def_readonly("labels", &FitResult::labels)
      .def_readonly("bic", &FitResult::bic)
      .def_readonly("n_free_params", &FitResult::n_free_params)
      .def_property_readonly("loglik",
                             [](const FitResult& r) { return r.posteriors.loglik; })
      .def_property_readonly("gamma",
                             [](const FitResult& r) { return r.posteriors.gamma; });

  py::class_<TrueParams>(m, "TrueParams")
      .def_readonly("pi", &TrueParams::pi)
      .def_readonly("a", &TrueParams::a)
      .def_readonly("means", &TrueParams::means)
      .def_readonly("sigmas", &TrueParams::sigmas)
      .def_property_readonly(
          "precisions", [](const TrueParams& p) { return unwrap(p.precisions); });

  py::class_<SyntheticDataset>(m, "SyntheticDataset")
      .def_readonly("x", &SyntheticDataset::x)
      .def_readonly("labels", &SyntheticDataset::labels)
      .def_readonly("weights", &SyntheticDataset::weights)
      .def_readonly("truth", &SyntheticDataset::truth);

  py::class_<BicReport>(m, "BicReport")
      .def_readonly("loglik", &BicReport::loglik)
      .def_readonly("n_free", &BicReport::n_free)
      .def_readonly("n_obs", &BicReport::n_obs)
      .def_readonly("score", &BicReport::score);

  py::class_<KCandidate>(m, "KCandidate")
      .def_readonly("k", &KCandidate::k)
      .def_readonly("ok", &KCandidate::ok)
      .def_readonly("error", &KCandidate::error)
      .def_readonly("report", &KCandidate::report);

  py::class_<KSelection>(m, "KSelection")
      .def_readonly("best_k", &KSelection::best_k)
      .def_readonly("candidates", &KSelection::candidates);

  py::class_<ConsensusReport>(m, "ConsensusReport")
      .def_readonly("consensus", &ConsensusReport::consensus)
      .def_readonly("dispersion", &ConsensusReport::dispersion)
      .def_readonly("n_repeats", &ConsensusReport::n_repeats);

  py::class_<LambdaCandidate>(m, "LambdaCandidate")
      .def_readonly("lambda_", &LambdaCandidate::lambda)
      .def_readonly("ok", &LambdaCandidate::ok)
      .def_readonly("error", &LambdaCandidate::error)
      .def_readonly("report", &LambdaCandidate::report);

  py::class_<LambdaSelection>(m, "LambdaSelection")
      .def_readonly("best_lambda", &LambdaSelection::best_lambda)
      .def_readonly("candidates", &LambdaSelection::candidates);

  py::class_<NetworkScore>(m, "NetworkScore")
      .def_readonly("mcc_mean", &NetworkScore::mcc_mean)
      .def_readonly("per_state", &NetworkScore::per_state)
      .def_readonly("mapping", &NetworkScore::mapping)
      .def_readonly("coverage", &NetworkScore::coverage);

  py::class_<IncStepRecord>(m, "IncStepRecord")
      .def_readonly("t", &IncStepRecord::t)
      .def_readonly("gamma", &IncStepRecord::gamma)
      .def_readonly("label", &IncStepRecord::label)
      .def_readonly("prediction", &IncStepRecord::prediction)
      .def_readonly("refit", &IncStepRecord::refit);

  py::class_<IncState>(m, "IncState")
      .def_readonly("params", &IncState::params)
      .def_readonly("t", &IncState::t)
      .def_readonly("updates", &IncState::updates)
      .def("update", [](IncState& st, const Vector& x) { return inc_update(st, x); },
           py::arg("x"))
      .def("slide",
           [](IncState& st, const Vector& x, long window) {
             return slide_update(st, x, window);
           },
           py::arg("x"), py::arg("window"));

  m.def(
      "generate",
      [](long n, int k, int d, const std::string& mean, double mean_lo, double mean_hi,
         const std::string& cov, int max_degree, double edge_prob, double kappa,
         const std::string& transition, int smooth_steps, int smooth_lo, int smooth_hi,
         std::uint64_t seed) {
        GeneratorConfig gc;
        gc.n = n;
        gc.k = k;
        gc.d = d;
        gc.mean_mode = parse_mean(mean);
        gc.mean_lo = mean_lo;
        gc.mean_hi = mean_hi;
        gc.cov_mode = parse_cov(cov);
        gc.max_degree = max_degree;
        gc.edge_prob = edge_prob;
        gc.kappa = kappa;
        gc.transition = parse_transition(transition);
        gc.smooth_steps = smooth_steps;
        gc.smooth_lo = smooth_lo;
        gc.smooth_hi = smooth_hi;
        gc.seed = seed;
        return generate(gc);
      },
      py::arg("n") = 1000, py::arg("k") = 3, py::arg("d") = 10,
      py::arg("mean") = "normal", py::arg("mean_lo") = -10.0, py::arg("mean_hi") = 10.0,
      py::arg("cov") = "degree_bounded", py::arg("max_degree") = 3,
      py::arg("edge_prob") = 0.5, py::arg("kappa") = 50.0, py::arg("transition") = "sudden",
      py::arg("smooth_steps") = 10, py::arg("smooth_lo") = 5, py::arg("smooth_hi") = 20,
      py::arg("seed") = 0,
      "Sample a labeled synthetic time series with known mixing weights");

  m.def(
      "fit",
      [](const Matrix& x, int k, double lam, double tol, int max_iter, int n_init,
         const std::string& init, const std::string& chain, std::uint64_t seed) {
        return fit_em(x, make_fit_config(k, lam, tol, max_iter, n_init, init, chain, seed));
      },
      py::arg("x"), py::arg("k"), py::arg("lam") = 0.0, py::arg("tol") = 1e-4,
      py::arg("max_iter") = 200, py::arg("n_init") = 1, py::arg("init") = "kmeans",
      py::arg("chain") = "uniform", py::arg("seed") = 0,
      "Penalized EM fit, best of n_init restarts");

  m.def(
      "mem_fit",
      [](const Matrix& x, int k, int r, int mem_m, double lam, double tol, int max_iter,
         int n_init, const std::string& init, const std::string& chain,
         std::uint64_t seed) {
        MemConfig mc;
        mc.r = r;
        mc.m = mem_m;
        return mem_fit(x, make_fit_config(k, lam, tol, max_iter, n_init, init, chain, seed),
                       mc);
      },
      py::arg("x"), py::arg("k"), py::arg("r") = 1, py::arg("m") = 1, py::arg("lam") = 0.0,
      py::arg("tol") = 1e-4, py::arg("max_iter") = 200, py::arg("n_init") = 1,
      py::arg("init") = "kmeans", py::arg("chain") = "uniform", py::arg("seed") = 0,
      "Fit on the composite state space of the last r states, decoded back");

  m.def(
      "inc_init",
      [](const Matrix& x, int k, double lam, long refit_stride, double tol, int max_iter,
         int n_init, const std::string& init, const std::string& chain,
         std::uint64_t seed) {
        IncConfig ic;
        ic.refit_stride = refit_stride;
        return inc_init(x, make_fit_config(k, lam, tol, max_iter, n_init, init, chain, seed),
                        ic);
      },
      py::arg("x"), py::arg("k"), py::arg("lam") = 0.0, py::arg("refit_stride") = 1,
      py::arg("tol") = 1e-4, py::arg("max_iter") = 200, py::arg("n_init") = 1,
      py::arg("init") = "kmeans", py::arg("chain") = "uniform", py::arg("seed") = 0,
      "Batch fit plus sufficient statistics, ready for per-observation updates");

  m.def("forward_backward", &forward_backward, py::arg("params"), py::arg("x"));
  m.def("predict_next", &predict_next, py::arg("params"), py::arg("e"),
        "Posterior weighted mean of the next observation");
  m.def(
      "solve_glasso",
      [](const Matrix& s, double lam, double tol, int max_iter) {
        GlassoConfig gc;
        gc.tol = tol;
        gc.max_iter = max_iter;
        return solve_glasso(SymMatrix(s), lam, gc).theta.mat();
      },
      py::arg("s"), py::arg("lam"), py::arg("tol") = 1e-6, py::arg("max_iter") = 1000,
      "L1 penalized precision estimate from a covariance");

  m.def(
      "select_k",
      [](const Matrix& x, const std::vector<int>& ks, double lam, double tol, int max_iter,
         int n_init, const std::string& init, const std::string& chain,
         std::uint64_t seed) {
        return select_k(x, ks,
                        make_fit_config(0, lam, tol, max_iter, n_init, init, chain, seed));
      },
      py::arg("x"), py::arg("ks"), py::arg("lam") = 0.0, py::arg("tol") = 1e-4,
      py::arg("max_iter") = 200, py::arg("n_init") = 1, py::arg("init") = "kmeans",
      py::arg("chain") = "uniform", py::arg("seed") = 0,
      "Pick the state count by BIC over candidate fits");

  m.def(
      "select_lambda",
      [](const Matrix& x, int k, const std::vector<double>& grid, int n_repeats, double tol,
         int max_iter, const std::string& init, const std::string& chain,
         std::uint64_t seed) {
        return select_lambda(x, k, grid, n_repeats,
                             make_fit_config(k, 0.0, tol, max_iter, 1, init, chain, seed));
      },
      py::arg("x"), py::arg("k"), py::arg("grid"), py::arg("n_repeats") = 10,
      py::arg("tol") = 1e-4, py::arg("max_iter") = 200, py::arg("init") = "kmeans",
      py::arg("chain") = "uniform", py::arg("seed") = 0,
      "Pick the penalty by consensus dispersion across seeded refits");

  m.def(
      "stability",
      [](const Matrix& x, int k, double lam, int n_repeats, double tol, int max_iter,
         const std::string& init, const std::string& chain, std::uint64_t seed) {
        return stability(x, k, lam, n_repeats,
                         make_fit_config(k, lam, tol, max_iter, 1, init, chain, seed));
      },
      py::arg("x"), py::arg("k"), py::arg("lam"), py::arg("n_repeats") = 10,
      py::arg("tol") = 1e-4, py::arg("max_iter") = 200, py::arg("init") = "kmeans",
      py::arg("chain") = "uniform", py::arg("seed") = 0);

  m.def("count_free_params", &count_free_params, py::arg("params"),
        "Transition, mean and unique nonzero precision entries");
  m.def(
      "bic", [](double loglik, int n_free, long n_obs) { return bic(loglik, n_free, n_obs); },
      py::arg("loglik"), py::arg("n_free"), py::arg("n_obs"));

  m.def("v_measure", &v_measure, py::arg("truth"), py::arg("pred"));
  m.def("map_clusters", &map_clusters, py::arg("truth"), py::arg("pred"));
  m.def("mcc", &mcc, py::arg("truth"), py::arg("pred"), py::arg("d"));
  m.def(
      "graph_from_precision",
      [](const Matrix& theta, double threshold) {
        return graph_from_precision(SymMatrix(theta), threshold);
      },
      py::arg("theta"), py::arg("threshold") = 1e-8,
      "Edge set of off-diagonal entries above the threshold");
  m.def("mae", &mae, py::arg("a"), py::arg("b"));
  m.def(
      "network_score",
      [](const IntVector& truth_labels, const std::vector<Matrix>& truth_precisions,
         const IntVector& pred_labels, const std::vector<Matrix>& pred_precisions) {
        std::vector<SymMatrix> tp, pp;
        for (const Matrix& t : truth_precisions) tp.emplace_back(t);
        for (const Matrix& p : pred_precisions) pp.emplace_back(p);
        return network_score(truth_labels, tp, pred_labels, pp);
      },
      py::arg("truth_labels"), py::arg("truth_precisions"), py::arg("pred_labels"),
      py::arg("pred_precisions"),
      "Mean MCC over truth states after greedy overlap mapping");

  m.def("save_model", &save_model, py::arg("path"), py::arg("params"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "read_csv", [](const std::string& path, bool header) { return read_csv(path, header); },
      py::arg("path"), py::arg("header") = false);
  m.def(
      "write_csv",
      [](const std::string& path, const Matrix& x, bool header) {
        write_csv(path, x, header);
      },
      py::arg("path"), py::arg("x"), py::arg("header") = false);
}
