// command line front end: generate / fit / select / evaluate / predict / stream
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tagm/extensions.hpp"
#include "tagm/hmm.hpp"
#include "tagm/io.hpp"
#include "tagm/metrics.hpp"
#include "tagm/model_selection.hpp"
#include "tagm/synthgen.hpp"

namespace fs = std::filesystem;
using namespace tagm;

namespace {

// flag values that parse but make no sense; exits with the usage code
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Stopwatch {
  std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - mark).count();
    mark = now;
    return s;
  }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e)
    throw UsageError(what + ": malformed number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto* b = s.data();
  const auto* e = s.data() + s.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e)
    throw UsageError(what + ": malformed integer '" + s + "'");
  return v;
}

// "normal" | "uniform" | "uniform:LO,HI"
void parse_mean(const std::string& spec, GeneratorConfig& cfg, Json& echo) {
  const auto parts = split(spec, ':');
  if (parts[0] == "normal" && parts.size() == 1) {
    cfg.mean_mode = MeanMode::normal;
    echo = Json{{"mode", "normal"}};
    return;
  }
  if (parts[0] == "uniform" && parts.size() <= 2) {
    cfg.mean_mode = MeanMode::uniform;
    if (parts.size() == 2) {
      const auto bounds = split(parts[1], ',');
      if (bounds.size() != 2) throw UsageError("--mean uniform wants LO,HI");
      cfg.mean_lo = parse_num(bounds[0], "--mean");
      cfg.mean_hi = parse_num(bounds[1], "--mean");
    }
    echo = Json{{"mode", "uniform"}, {"lo", cfg.mean_lo}, {"hi", cfg.mean_hi}};
    return;
  }
  throw UsageError("--mean: unknown spec '" + spec + "'");
}

// "degree_bounded:D" | "random_spd" | "stressed:P"
void parse_cov(const std::string& spec, GeneratorConfig& cfg, Json& echo) {
  const auto parts = split(spec, ':');
  if (parts[0] == "degree_bounded" && parts.size() <= 2) {
    cfg.cov_mode = CovMode::degree_bounded;
    if (parts.size() == 2) cfg.max_degree = parse_int(parts[1], "--cov");
    echo = Json{{"mode", "degree_bounded"}, {"max_degree", cfg.max_degree}};
    return;
  }
  if (parts[0] == "random_spd" && parts.size() == 1) {
    cfg.cov_mode = CovMode::random_spd;
    echo = Json{{"mode", "random_spd"}};
    return;
  }
  if (parts[0] == "stressed" && parts.size() <= 2) {
    cfg.cov_mode = CovMode::stressed;
    if (parts.size() == 2) cfg.edge_prob = parse_num(parts[1], "--cov");
    echo = Json{{"mode", "stressed"}, {"edge_prob", cfg.edge_prob}};
    return;
  }
  throw UsageError("--cov: unknown spec '" + spec + "'");
}

// "sudden" | "fixed_smooth:S" | "random_smooth:LO,HI" | "random_smooth_random_weights:LO,HI"
void parse_transition(const std::string& spec, GeneratorConfig& cfg, Json& echo) {
  const auto parts = split(spec, ':');
  if (parts[0] == "sudden" && parts.size() == 1) {
    cfg.transition = TransitionMode::sudden;
    echo = Json{{"mode", "sudden"}};
    return;
  }
  if (parts[0] == "fixed_smooth" && parts.size() <= 2) {
    cfg.transition = TransitionMode::fixed_smooth;
    if (parts.size() == 2) cfg.smooth_steps = parse_int(parts[1], "--transition");
    echo = Json{{"mode", "fixed_smooth"}, {"steps", cfg.smooth_steps}};
    return;
  }
  if ((parts[0] == "random_smooth" || parts[0] == "random_smooth_random_weights") &&
      parts.size() <= 2) {
    cfg.transition = parts[0] == "random_smooth"
                         ? TransitionMode::random_smooth
                         : TransitionMode::random_smooth_random_weights;
    if (parts.size() == 2) {
      const auto bounds = split(parts[1], ',');
      if (bounds.size() != 2) throw UsageError("--transition " + parts[0] + " wants LO,HI");
      cfg.smooth_lo = parse_int(bounds[0], "--transition");
      cfg.smooth_hi = parse_int(bounds[1], "--transition");
    }
    echo = Json{{"mode", parts[0]}, {"lo", cfg.smooth_lo}, {"hi", cfg.smooth_hi}};
    return;
  }
  throw UsageError("--transition: unknown spec '" + spec + "'");
}

// "kmeans" | "gmm", optional ":uniform|random_uniform|dirichlet"
void parse_init(const std::string& spec, InitConfig& cfg, Json& echo) {
  const auto parts = split(spec, ':');
  if (parts.size() > 2) throw UsageError("--init: unknown spec '" + spec + "'");
  if (parts[0] == "kmeans") cfg.cluster = InitConfig::Cluster::kmeans;
  else if (parts[0] == "gmm") cfg.cluster = InitConfig::Cluster::gmm;
  else throw UsageError("--init: unknown cluster method '" + parts[0] + "'");
  std::string chain = "uniform";
  if (parts.size() == 2) chain = parts[1];
  if (chain == "uniform") cfg.chain = InitConfig::Chain::uniform;
  else if (chain == "random_uniform") cfg.chain = InitConfig::Chain::random_uniform;
  else if (chain == "dirichlet") cfg.chain = InitConfig::Chain::dirichlet;
  else throw UsageError("--init: unknown chain mode '" + chain + "'");
  echo = Json{{"cluster", parts[0]}, {"chain", chain}};
}

// "3..8" | "3,5,7" | "4"
IntVector parse_k_range(const std::string& spec) {
  const auto dots = spec.find("..");
  IntVector out;
  if (dots != std::string::npos) {
    const int lo = parse_int(spec.substr(0, dots), "--k-range");
    const int hi = parse_int(spec.substr(dots + 2), "--k-range");
    if (lo > hi) throw UsageError("--k-range: empty range '" + spec + "'");
    for (int k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  }
  for (const auto& tok : split(spec, ',')) out.push_back(parse_int(tok, "--k-range"));
  return out;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  for (const auto& tok : split(spec, ',')) out.push_back(parse_num(tok, "--lambda-grid"));
  return out;
}

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json labels_json(const IntVector& v) {
  Json a = Json::array();
  for (int x : v) a.push_back(x);
  return a;
}

// written last so it can list every other output with its content digest
void write_manifest(const fs::path& dir, const std::string& command, const Json& config,
                    std::uint64_t seed, const Json& timings,
                    const std::vector<std::string>& files) {
  Json outputs = Json::array();
  for (const auto& f : files)
    outputs.push_back(Json{{"path", f}, {"digest", digest_file((dir / f).string())}});
  const Json manifest{{"command", command}, {"config", config},   {"seed", seed},
                      {"version", TAGM_VERSION}, {"timings", timings}, {"outputs", outputs}};
  write_json((dir / "manifest.json").string(), manifest);
}

// filtered forward recursion; row t predicts observation t+1
Matrix rolling_predictions(const ModelParams& p, const Matrix& x) {
  validate_params(p);
  if (x.cols() != p.dim())
    throw InputError("predict: data has " + std::to_string(x.cols()) +
                     " columns but the model dimension is " + std::to_string(p.dim()));
  if (x.rows() < 1) throw InputError("predict: no observations");
  const int k = p.n_states();
  Matrix mu(k, p.dim());
  for (int j = 0; j < k; ++j) mu.row(j) = p.means[j].transpose();
  Matrix out(x.rows(), p.dim());
  Vector alpha(k);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    Vector logb(k);
    for (int j = 0; j < k; ++j)
      logb(j) = log_emission(x.row(t).transpose(), p.means[j], p.precisions[j]);
    const Vector b = (logb.array() - logb.maxCoeff()).exp();
    const Vector prior = t == 0 ? p.pi : Vector(p.a.transpose() * alpha);
    alpha = prior.cwiseProduct(b);
    const double c = alpha.sum();
    if (!(c > 0.0) || !std::isfinite(c))
      throw DegenerateEmissionError("predict: emission densities vanished at step " +
                                    std::to_string(t));
    alpha /= c;
    out.row(t) = (mu.transpose() * (p.a.transpose() * alpha)).transpose();
  }
  return out;
}

struct GenerateOpts {
  GeneratorConfig cfg;
  std::string mean_spec = "normal";
  std::string cov_spec = "degree_bounded:3";
  std::string trans_spec = "sudden";
  std::string out = ".";
  bool header = false;
};

int run_generate(GenerateOpts& o) {
  Json mean_echo, cov_echo, trans_echo;
  parse_mean(o.mean_spec, o.cfg, mean_echo);
  parse_cov(o.cov_spec, o.cfg, cov_echo);
  parse_transition(o.trans_spec, o.cfg, trans_echo);
  const Json config{{"n", o.cfg.n},         {"k", o.cfg.k},
                    {"d", o.cfg.d},         {"mean", mean_echo},
                    {"cov", cov_echo},      {"transition", trans_echo},
                    {"kappa", o.cfg.kappa}, {"seed", o.cfg.seed},
                    {"header", o.header},   {"out", o.out}};
  Stopwatch sw;
  const SyntheticDataset data = generate(o.cfg);
  const double t_gen = sw.lap();
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_csv((dir / "observations.csv").string(), data.x, o.header);
  write_labels((dir / "labels.txt").string(), data.labels);
  write_json((dir / "truth.json").string(), truth_to_json(data));
  const double t_write = sw.lap();
  write_manifest(dir, "generate", config, o.cfg.seed,
                 Json{{"generate", t_gen}, {"write", t_write}},
                 {"observations.csv", "labels.txt", "truth.json"});
  return 0;
}

struct FitOpts {
  std::string data;
  FitConfig cfg;
  std::string init_spec = "kmeans:uniform";
  std::string out = ".";
  bool header = false;
};

Json fit_config_echo(const FitOpts& o, const Json& init_echo) {
  return Json{{"data", o.data},           {"k", o.cfg.k},
              {"lambda", o.cfg.lambda},   {"tol", o.cfg.tol},
              {"max_iter", o.cfg.max_iter}, {"n_init", o.cfg.n_init},
              {"init", init_echo},        {"seed", o.cfg.init.seed},
              {"header", o.header},       {"out", o.out}};
}

int run_fit(FitOpts& o) {
  Json init_echo;
  parse_init(o.init_spec, o.cfg.init, init_echo);
  Stopwatch sw;
  const Matrix x = read_csv(o.data, o.header);
  const double t_read = sw.lap();
  const FitResult fit = fit_em(x, o.cfg);
  const double t_fit = sw.lap();
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  save_model((dir / "model.json").string(), fit.params);
  Json trace = Json::array();
  for (double v : fit.trace) trace.push_back(v);
  const Json report{{"k", o.cfg.k},
                    {"lambda", o.cfg.lambda},
                    {"n_obs", x.rows()},
                    {"n_iter", fit.trace.size()},
                    {"loglik", fit.posteriors.loglik},
                    {"bic", fit.bic},
                    {"n_free_params", fit.n_free_params},
                    {"trace", trace},
                    {"labels", labels_json(fit.labels)}};
  write_json((dir / "report.json").string(), report);
  const double t_write = sw.lap();
  write_manifest(dir, "fit", fit_config_echo(o, init_echo), o.cfg.init.seed,
                 Json{{"read", t_read}, {"fit", t_fit}, {"write", t_write}},
                 {"model.json", "report.json"});
  return 0;
}

struct SelectOpts {
  std::string data;
  std::string k_range;
  std::string lambda_grid;
  int repeats = 10;
  FitConfig cfg;
  std::string init_spec = "kmeans:uniform";
  std::string out = ".";
  bool header = false;
};

int run_select(SelectOpts& o) {
  Json init_echo;
  parse_init(o.init_spec, o.cfg.init, init_echo);
  const IntVector k_range = parse_k_range(o.k_range);
  const std::vector<double> grid = parse_grid(o.lambda_grid);
  if (grid.empty()) throw UsageError("--lambda-grid: empty grid");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  const double lambda_fixed = sorted[(sorted.size() - 1) / 2];
  const Json config{{"data", o.data},
                    {"k_range", labels_json(k_range)},
                    {"lambda_grid", grid},
                    {"lambda_fixed", lambda_fixed},
                    {"repeats", o.repeats},
                    {"tol", o.cfg.tol},
                    {"max_iter", o.cfg.max_iter},
                    {"n_init", o.cfg.n_init},
                    {"init", init_echo},
                    {"seed", o.cfg.init.seed},
                    {"header", o.header},
                    {"out", o.out}};
  Stopwatch sw;
  const Matrix x = read_csv(o.data, o.header);
  const double t_read = sw.lap();
  FitConfig cfg = o.cfg;
  cfg.lambda = lambda_fixed;
  const KSelection ks = select_k(x, k_range, cfg);
  const double t_k = sw.lap();
  const LambdaSelection ls = select_lambda(x, ks.best_k, grid, o.repeats, o.cfg);
  const double t_lambda = sw.lap();

  Json k_cands = Json::array();
  for (const auto& c : ks.candidates) {
    Json j{{"k", c.k}, {"ok", c.ok}};
    if (c.ok) {
      j["loglik"] = c.report.loglik;
      j["n_free"] = c.report.n_free;
      j["n_obs"] = c.report.n_obs;
      j["score"] = c.report.score;
    } else {
      j["error"] = c.error;
    }
    k_cands.push_back(std::move(j));
  }
  Json l_cands = Json::array();
  for (const auto& c : ls.candidates) {
    Json j{{"lambda", c.lambda}, {"ok", c.ok}};
    if (c.ok) {
      // the consensus matrix itself is n x n and stays out of the report
      j["dispersion"] = c.report.dispersion;
      j["n_repeats"] = c.report.n_repeats;
    } else {
      j["error"] = c.error;
    }
    l_cands.push_back(std::move(j));
  }
  const Json selection{
      {"lambda_fixed", lambda_fixed},
      {"k_selection", Json{{"best_k", ks.best_k}, {"candidates", k_cands}}},
      {"lambda_selection", Json{{"best_lambda", ls.best_lambda}, {"candidates", l_cands}}}};
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_json((dir / "selection.json").string(), selection);
  const double t_write = sw.lap();
  write_manifest(dir, "select", config, o.cfg.init.seed,
                 Json{{"read", t_read},
                      {"select_k", t_k},
                      {"select_lambda", t_lambda},
                      {"write", t_write}},
                 {"selection.json"});
  return 0;
}

struct EvaluateOpts {
  std::string model;
  std::string data;
  std::string labels;
  std::string truth;
  bool with_mae = false;
  std::string out = ".";
  bool header = false;
};

int run_evaluate(EvaluateOpts& o) {
  const Json config{{"model", o.model}, {"data", o.data},   {"labels", o.labels},
                    {"truth", o.truth}, {"mae", o.with_mae}, {"header", o.header},
                    {"out", o.out}};
  Stopwatch sw;
  const ModelParams params = load_model(o.model);
  const Matrix x = read_csv(o.data, o.header);
  const IntVector truth_labels = read_labels(o.labels);
  std::optional<TruthFile> truth;
  if (!o.truth.empty()) truth = truth_from_json(read_json(o.truth));
  const double t_read = sw.lap();

  const EStepResult e = forward_backward(params, x);
  const IntVector pred = labels_from_gamma(e.gamma);
  Json metrics{{"v_measure", v_measure(truth_labels, pred)},
               {"mapping", labels_json(map_clusters(truth_labels, pred))}};
  if (truth) {
    const NetworkScore ns =
        network_score(truth_labels, truth->params.precisions, pred, params.precisions);
    metrics["mcc_mean"] = ns.mcc_mean;
    metrics["mcc_per_state"] = ns.per_state;
    metrics["coverage"] = ns.coverage;
  }
  if (o.with_mae) {
    if (x.rows() < 2) throw InputError("evaluate: --mae needs at least 2 observations");
    const Matrix preds = rolling_predictions(params, x);
    metrics["mae"] = mae(x.bottomRows(x.rows() - 1), preds.topRows(x.rows() - 1));
  }
  const double t_eval = sw.lap();
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_json((dir / "metrics.json").string(), metrics);
  const double t_write = sw.lap();
  write_manifest(dir, "evaluate", config, 0,
                 Json{{"read", t_read}, {"evaluate", t_eval}, {"write", t_write}},
                 {"metrics.json"});
  return 0;
}

struct PredictOpts {
  std::string model;
  std::string data;
  int horizon = 1;
  std::string out = ".";
  bool header = false;
};

int run_predict(PredictOpts& o) {
  if (o.horizon != 1) throw UsageError("--horizon: only one step ahead is supported");
  const Json config{{"model", o.model},   {"data", o.data}, {"horizon", o.horizon},
                    {"header", o.header}, {"out", o.out}};
  Stopwatch sw;
  const ModelParams params = load_model(o.model);
  const Matrix x = read_csv(o.data, o.header);
  const double t_read = sw.lap();
  const Matrix preds = rolling_predictions(params, x);
  const double t_predict = sw.lap();
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_csv((dir / "predictions.csv").string(), preds, o.header);
  Json report{{"n_predictions", preds.rows()}};
  if (x.rows() >= 2) {
    const double m = mae(x.bottomRows(x.rows() - 1), preds.topRows(x.rows() - 1));
    report["mae"] = m;
    std::cout << "mae " << format_double(m) << "\n";
  }
  write_json((dir / "report.json").string(), report);
  const double t_write = sw.lap();
  write_manifest(dir, "predict", config, 0,
                 Json{{"read", t_read}, {"predict", t_predict}, {"write", t_write}},
                 {"predictions.csv", "report.json"});
  return 0;
}

struct StreamOpts {
  std::string batch;
  std::string model;
  std::string mode = "inc";
  int window = 0;
  IncConfig inc;
  FitConfig cfg;
  std::string init_spec = "kmeans:uniform";
  std::string out = ".";
  bool header = false;
};

// strict CSV row: d comma separated doubles
Vector parse_stream_row(const std::string& line, int d) {
  const auto cells = split(line, ',');
  if (static_cast<int>(cells.size()) != d)
    throw InputError("expected " + std::to_string(d) + " values, got " +
                     std::to_string(cells.size()));
  Vector v(d);
  for (int j = 0; j < d; ++j) {
    std::string cell = cells[j];
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.erase(0, 1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
    double x = 0.0;
    const auto* b = cell.data();
    const auto* e = cell.data() + cell.size();
    const auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e)
      throw InputError("malformed number '" + cells[j] + "'");
    v(j) = x;
  }
  return v;
}

int run_stream(StreamOpts& o) {
  if (o.mode != "inc" && o.mode != "slide")
    throw UsageError("--mode: expected inc or slide");
  if (o.mode == "slide" && o.window < 1)
    throw UsageError("--mode slide needs --window");
  Json init_echo;
  parse_init(o.init_spec, o.cfg.init, init_echo);
  const Json config{{"batch", o.batch},
                    {"model", o.model},
                    {"mode", o.mode},
                    {"window", o.window},
                    {"refit_stride", o.inc.refit_stride},
                    {"k", o.cfg.k},
                    {"lambda", o.cfg.lambda},
                    {"tol", o.cfg.tol},
                    {"max_iter", o.cfg.max_iter},
                    {"n_init", o.cfg.n_init},
                    {"init", init_echo},
                    {"seed", o.cfg.init.seed},
                    {"header", o.header},
                    {"out", o.out}};
  Stopwatch sw;
  const Matrix batch = read_csv(o.batch, o.header);
  IncState st;
  if (o.model.empty()) {
    st = inc_init(batch, o.cfg, o.inc);
  } else {
    // seed the running sums from an E-step under the supplied model; the
    // retained parameters are the M-step of those sums, keeping the state
    // self-consistent for later window evictions
    if (o.inc.refit_stride < 1) throw InputError("stream: refit_stride must be positive");
    const ModelParams given = load_model(o.model);
    const EStepResult e = forward_backward(given, batch);
    const MStepDetail det = m_step_detail(batch, e, o.cfg.lambda);
    st.params = det.params;
    st.lambda = o.cfg.lambda;
    st.refit_stride = o.inc.refit_stride;
    st.t = batch.rows();
    st.updates = 0;
    st.last_gamma = e.gamma.row(batch.rows() - 1).transpose();
    st.trans_num = det.trans_num;
    st.trans_den = det.trans_den;
    st.gamma_sum = det.gamma_sum;
    for (const auto& s : det.s_tilde) st.s_tilde.push_back(s.mat());
    const int k = st.params.n_states();
    for (Eigen::Index t = 0; t < batch.rows(); ++t) {
      StepContribution c;
      c.x = batch.row(t).transpose();
      c.gamma = e.gamma.row(t).transpose();
      c.xi = t == 0 ? Matrix::Zero(k, k) : e.xi[t - 1];
      c.gamma_rev = t == 0 ? Vector(Vector::Zero(k)) : Vector(c.xi.rowwise().sum());
      st.window.push_back(std::move(c));
    }
  }
  const double t_init = sw.lap();

  const int d = st.params.dim();
  std::string line;
  long line_no = 0;
  while (std::getline(std::cin, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Json rec;
    try {
      const Vector row = parse_stream_row(line, d);
      const IncStepRecord r = o.mode == "slide" ? slide_update(st, row, o.window)
                                                : inc_update(st, row);
      rec = Json{{"t", r.t},
                 {"gamma", vec_json(r.gamma)},
                 {"label", r.label},
                 {"prediction", vec_json(r.prediction)},
                 {"refit", r.refit}};
    } catch (const Error& err) {
      rec = Json{{"line", line_no}, {"error", err.what()}};
    }
    std::cout << rec.dump() << "\n";
  }
  const double t_stream = sw.lap();
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  save_model((dir / "model.json").string(), st.params);
  const double t_write = sw.lap();
  write_manifest(dir, "stream", config, o.cfg.init.seed,
                 Json{{"init", t_init}, {"stream", t_stream}, {"write", t_write}},
                 {"model.json"});
  return 0;
}

void add_fit_flags(CLI::App* cmd, FitConfig& cfg, std::string& init_spec, bool with_k) {
  if (with_k) {
    cmd->add_option("--k", cfg.k, "number of states");
    cmd->add_option("--lambda", cfg.lambda, "off diagonal l1 penalty");
  }
  cmd->add_option("--tol", cfg.tol, "EM improvement threshold");
  cmd->add_option("--max-iter", cfg.max_iter, "EM iteration cap");
  cmd->add_option("--n-init", cfg.n_init, "random restarts");
  cmd->add_option("--init", init_spec, "initialization, CLUSTER[:CHAIN]");
  cmd->add_option("--seed", cfg.init.seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint clustering of multivariate time series with sparse Gaussian state models"};
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "sample a synthetic benchmark dataset");
  g->add_option("--n", gen.cfg.n, "observations");
  g->add_option("--k", gen.cfg.k, "states");
  g->add_option("--d", gen.cfg.d, "dimensions");
  g->add_option("--mean", gen.mean_spec, "state means, normal or uniform[:LO,HI]");
  g->add_option("--cov", gen.cov_spec,
                "precisions, degree_bounded[:D], random_spd or stressed[:P]");
  g->add_option("--transition", gen.trans_spec,
                "sudden, fixed_smooth[:S] or random_smooth[:LO,HI]");
  g->add_option("--kappa", gen.cfg.kappa, "self transition concentration");
  g->add_option("--seed", gen.cfg.seed, "random seed");
  g->add_option("--out", gen.out, "output directory");
  g->add_flag("--header", gen.header, "write a CSV header row");

  FitOpts fit;
  auto* f = app.add_subcommand("fit", "fit the model to a CSV of observations");
  f->add_option("data", fit.data, "observations CSV")->required();
  add_fit_flags(f, fit.cfg, fit.init_spec, true);
  f->add_option("--out", fit.out, "output directory");
  f->add_flag("--header", fit.header, "data CSV has a header row");

  SelectOpts sel;
  auto* s = app.add_subcommand("select", "choose K by BIC and lambda by cluster stability");
  s->add_option("data", sel.data, "observations CSV")->required();
  s->add_option("--k-range", sel.k_range, "K candidates, LO..HI or comma list")->required();
  s->add_option("--lambda-grid", sel.lambda_grid, "lambda candidates, comma list")->required();
  s->add_option("--repeats", sel.repeats, "stability repeats per lambda");
  add_fit_flags(s, sel.cfg, sel.init_spec, false);
  s->add_option("--out", sel.out, "output directory");
  s->add_flag("--header", sel.header, "data CSV has a header row");

  EvaluateOpts ev;
  auto* e = app.add_subcommand("evaluate", "score a model against ground truth");
  e->add_option("--model", ev.model, "model JSON")->required();
  e->add_option("--data", ev.data, "observations CSV")->required();
  e->add_option("--labels", ev.labels, "true labels file")->required();
  e->add_option("--truth", ev.truth, "ground truth JSON enabling network scores");
  e->add_flag("--mae", ev.with_mae, "score one step ahead predictions");
  e->add_option("--out", ev.out, "output directory");
  e->add_flag("--header", ev.header, "data CSV has a header row");

  PredictOpts pr;
  auto* p = app.add_subcommand("predict", "rolling one step ahead forecasts");
  p->add_option("--model", pr.model, "model JSON")->required();
  p->add_option("--data", pr.data, "observations CSV")->required();
  p->add_option("--horizon", pr.horizon, "forecast horizon");
  p->add_option("--out", pr.out, "output directory");
  p->add_flag("--header", pr.header, "data CSV has a header row");

  StreamOpts str;
  auto* t = app.add_subcommand("stream", "online updates over standard input rows");
  t->add_option("--batch", str.batch, "initialization batch CSV")->required();
  t->add_option("--model", str.model, "model JSON replacing the batch fit");
  t->add_option("--mode", str.mode, "inc or slide");
  t->add_option("--window", str.window, "sliding window length");
  t->add_option("--refit-stride", str.inc.refit_stride, "precision refit cadence");
  add_fit_flags(t, str.cfg, str.init_spec, true);
  t->add_option("--out", str.out, "output directory");
  t->add_flag("--header", str.header, "batch CSV has a header row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (g->parsed()) return run_generate(gen);
    if (f->parsed()) return run_fit(fit);
    if (s->parsed()) return run_select(sel);
    if (e->parsed()) return run_evaluate(ev);
    if (p->parsed()) return run_predict(pr);
    if (t->parsed()) return run_stream(str);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 5;
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 4;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 5;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
