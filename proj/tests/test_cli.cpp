#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tagm/io.hpp"
#include "tagm/metrics.hpp"

using namespace tagm;
namespace fs = std::filesystem;

namespace {

int temp_counter = 0;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tagm_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(temp_counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

// drives the installed binary through the shell; stdout/stderr come back as text
RunResult run_cli(const std::string& args, const std::string& stdin_path = "") {
  TempDir cap;
  const std::string out_f = cap.file("out");
  const std::string err_f = cap.file("err");
  std::string cmd = std::string(TAGM_CLI_PATH) + " " + args + " >" + out_f + " 2>" + err_f;
  cmd += stdin_path.empty() ? " </dev/null" : " <" + stdin_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.out = slurp(out_f);
  r.err = slurp(err_f);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("generate writes dataset, labels, truth and manifest") {
  TempDir tmp;
  const auto r = run_cli("generate --n 60 --k 2 --d 3 --cov degree_bounded:2 "
                         "--transition sudden --seed 7 --out " + tmp.file("gen"));
  REQUIRE(r.code == 0);

  const Matrix x = read_csv(tmp.file("gen/observations.csv"));
  CHECK(x.rows() == 60);
  CHECK(x.cols() == 3);
  const IntVector labels = read_labels(tmp.file("gen/labels.txt"));
  REQUIRE(labels.size() == 60);
  for (int l : labels) CHECK((l == 0 || l == 1));
  const TruthFile truth = truth_from_json(read_json(tmp.file("gen/truth.json")));
  CHECK(truth.params.n_states() == 2);
  CHECK(truth.weights.rows() == 60);

  const Json manifest = read_json(tmp.file("gen/manifest.json"));
  CHECK(manifest["command"] == "generate");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["version"] == std::string(TAGM_VERSION));
  CHECK(manifest["config"]["n"] == 60);
  CHECK(manifest["config"]["cov"]["max_degree"] == 2);
  CHECK(manifest["timings"].contains("generate"));
  CHECK(manifest["timings"].contains("write"));
  REQUIRE(manifest["outputs"].size() == 3);
  for (const auto& entry : manifest["outputs"]) {
    const std::string name = entry["path"];
    CHECK(name != "manifest.json");
    CHECK(entry["digest"] == digest_file(tmp.file("gen/" + name)));
  }
}

TEST_CASE("generate is deterministic in the seed") {
  TempDir tmp;
  const std::string flags = "generate --n 40 --k 2 --d 2 --cov degree_bounded:1 --seed 9 --out ";
  REQUIRE(run_cli(flags + tmp.file("a")).code == 0);
  REQUIRE(run_cli(flags + tmp.file("b")).code == 0);
  CHECK(slurp(tmp.file("a/observations.csv")) == slurp(tmp.file("b/observations.csv")));
  CHECK(slurp(tmp.file("a/labels.txt")) == slurp(tmp.file("b/labels.txt")));
  CHECK(slurp(tmp.file("a/truth.json")) == slurp(tmp.file("b/truth.json")));

  REQUIRE(run_cli("generate --n 40 --k 2 --d 2 --cov degree_bounded:1 --seed 10 --out " +
                  tmp.file("c")).code == 0);
  CHECK(slurp(tmp.file("a/observations.csv")) != slurp(tmp.file("c/observations.csv")));
}

TEST_CASE("smooth transitions blend the truth weights") {
  TempDir tmp;
  const auto r = run_cli("generate --n 120 --k 2 --d 2 --cov degree_bounded:1 "
                         "--transition fixed_smooth:4 --kappa 5 --seed 3 --out " + tmp.file("g"));
  REQUIRE(r.code == 0);
  const TruthFile truth = truth_from_json(read_json(tmp.file("g/truth.json")));
  int blended = 0;
  for (Eigen::Index t = 0; t < truth.weights.rows(); ++t)
    if (truth.weights.row(t).maxCoeff() < 0.999) ++blended;
  CHECK(blended > 0);
}

TEST_CASE("fit writes a model and a faithful report") {
  TempDir tmp;
  REQUIRE(run_cli("generate --n 90 --k 2 --d 2 --cov degree_bounded:1 --seed 11 --out " +
                  tmp.file("g")).code == 0);
  const std::string fit_flags = " --k 2 --lambda 1 --n-init 2 --seed 3 --out ";
  const auto r = run_cli("fit " + tmp.file("g/observations.csv") + fit_flags + tmp.file("f"));
  REQUIRE(r.code == 0);

  const ModelParams params = load_model(tmp.file("f/model.json"));
  CHECK(params.n_states() == 2);
  validate_params(params);

  const Json report = read_json(tmp.file("f/report.json"));
  CHECK(report["n_obs"] == 90);
  CHECK(report["labels"].size() == 90);
  CHECK(report["trace"].size() == report["n_iter"]);
  const auto& trace = report["trace"];
  for (std::size_t i = 1; i < trace.size(); ++i)
    CHECK(double(trace[i]) >= double(trace[i - 1]) - 1e-8);
  CHECK(std::isfinite(double(report["bic"])));
  // wall clock lives in the manifest so the report stays reproducible
  CHECK(!report.contains("runtime"));

  const auto r2 = run_cli("fit " + tmp.file("g/observations.csv") + fit_flags + tmp.file("f2"));
  REQUIRE(r2.code == 0);
  CHECK(slurp(tmp.file("f/model.json")) == slurp(tmp.file("f2/model.json")));
  CHECK(slurp(tmp.file("f/report.json")) == slurp(tmp.file("f2/report.json")));
}

TEST_CASE("single state fit recovers the column means") {
  TempDir tmp;
  Matrix x(40, 2);
  for (int t = 0; t < 40; ++t) {
    x(t, 0) = 0.1 * t - 2.0;
    x(t, 1) = std::sin(0.7 * t);
  }
  write_csv(tmp.file("x.csv"), x);
  REQUIRE(run_cli("fit " + tmp.file("x.csv") + " --k 1 --out " + tmp.file("f")).code == 0);
  const ModelParams params = load_model(tmp.file("f/model.json"));
  REQUIRE(params.n_states() == 1);
  CHECK((params.means[0] - x.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exit codes follow the error taxonomy") {
  TempDir tmp;
  CHECK(run_cli("fit " + tmp.file("missing.csv") + " --k 1").code == 5);

  spit(tmp.file("ragged.csv"), "1,2\n3\n");
  const auto ragged = run_cli("fit " + tmp.file("ragged.csv") + " --k 1 --out " + tmp.file("r"));
  CHECK(ragged.code == 5);
  CHECK(ragged.err.find("line 2") != std::string::npos);

  Matrix x(6, 1);
  x << 0, 1, 0, 1, 0, 1;
  write_csv(tmp.file("x.csv"), x);
  CHECK(run_cli("fit " + tmp.file("x.csv") + " --k 0 --out " + tmp.file("k0")).code == 3);
  CHECK(run_cli("fit " + tmp.file("x.csv") + " --k 9 --out " + tmp.file("k9")).code == 4);

  CHECK(run_cli("fit " + tmp.file("x.csv") + " --no-such-flag").code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("stream --batch " + tmp.file("x.csv") + " --mode slide").code == 2);
}

TEST_CASE("select reports every candidate") {
  TempDir tmp;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.3);
  Matrix x(60, 2);
  for (int t = 0; t < 60; ++t) {
    const double c = t < 30 ? -4.0 : 4.0;
    x(t, 0) = c + g(rng);
    x(t, 1) = -c + g(rng);
  }
  write_csv(tmp.file("x.csv"), x);
  const auto r = run_cli("select " + tmp.file("x.csv") +
                         " --k-range 1..3 --lambda-grid 0.5,1.0 --repeats 3 --seed 5 --out " +
                         tmp.file("s"));
  REQUIRE(r.code == 0);
  const Json sel = read_json(tmp.file("s/selection.json"));
  CHECK(sel["k_selection"]["best_k"] == 2);
  REQUIRE(sel["k_selection"]["candidates"].size() == 3);
  for (const auto& c : sel["k_selection"]["candidates"]) {
    REQUIRE(bool(c["ok"]));
    CHECK(c.contains("score"));
    CHECK(c.contains("loglik"));
    CHECK(c.contains("n_free"));
    CHECK(c["n_obs"] == 60);
  }
  REQUIRE(sel["lambda_selection"]["candidates"].size() == 2);
  for (const auto& c : sel["lambda_selection"]["candidates"]) {
    REQUIRE(bool(c["ok"]));
    CHECK(c.contains("dispersion"));
    CHECK(c["n_repeats"] == 3);
  }

  const auto single = run_cli("select " + tmp.file("x.csv") +
                              " --k-range 2 --lambda-grid 1.0 --repeats 3 --seed 5 --out " +
                              tmp.file("s1"));
  REQUIRE(single.code == 0);
  const Json sel1 = read_json(tmp.file("s1/selection.json"));
  CHECK(sel1["k_selection"]["best_k"] == 2);
  CHECK(sel1["lambda_selection"]["best_lambda"] == 1.0);
}

TEST_CASE("evaluate scores clustering and networks") {
  TempDir tmp;
  REQUIRE(run_cli("generate --n 120 --k 2 --d 3 --cov degree_bounded:2 --seed 13 --out " +
                  tmp.file("g")).code == 0);
  REQUIRE(run_cli("fit " + tmp.file("g/observations.csv") +
                  " --k 2 --lambda 2 --n-init 2 --seed 3 --out " + tmp.file("f")).code == 0);

  const auto full = run_cli("evaluate --model " + tmp.file("f/model.json") + " --data " +
                            tmp.file("g/observations.csv") + " --labels " +
                            tmp.file("g/labels.txt") + " --truth " + tmp.file("g/truth.json") +
                            " --mae --out " + tmp.file("e"));
  REQUIRE(full.code == 0);
  const Json metrics = read_json(tmp.file("e/metrics.json"));
  const double v = metrics["v_measure"];
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
  CHECK(metrics.contains("mcc_mean"));
  CHECK(metrics["mcc_per_state"].size() == 2);
  CHECK(metrics.contains("coverage"));
  CHECK(metrics.contains("mae"));
  CHECK(metrics["mapping"].size() == 2);

  const auto labels_only = run_cli("evaluate --model " + tmp.file("f/model.json") + " --data " +
                                   tmp.file("g/observations.csv") + " --labels " +
                                   tmp.file("g/labels.txt") + " --out " + tmp.file("e2"));
  REQUIRE(labels_only.code == 0);
  const Json m2 = read_json(tmp.file("e2/metrics.json"));
  CHECK(m2.contains("v_measure"));
  CHECK(!m2.contains("mcc_mean"));
  CHECK(!m2.contains("mae"));

  Matrix narrow(10, 2);
  narrow.setZero();
  write_csv(tmp.file("narrow.csv"), narrow);
  CHECK(run_cli("evaluate --model " + tmp.file("f/model.json") + " --data " +
                tmp.file("narrow.csv") + " --labels " + tmp.file("g/labels.txt") + " --out " +
                tmp.file("e3")).code == 3);
}

TEST_CASE("predict rolls one step ahead forecasts") {
  TempDir tmp;
  ModelParams p;
  p.pi = Vector::Ones(1);
  p.a = Matrix::Ones(1, 1);
  Vector mu(2);
  mu << 2.5, -1.0;
  p.means.push_back(mu);
  p.precisions.push_back(SymMatrix::identity(2));
  save_model(tmp.file("model.json"), p);

  Matrix x = mu.transpose().replicate(5, 1);
  write_csv(tmp.file("x.csv"), x);
  const auto r = run_cli("predict --model " + tmp.file("model.json") + " --data " +
                         tmp.file("x.csv") + " --out " + tmp.file("p"));
  REQUIRE(r.code == 0);
  const Matrix preds = read_csv(tmp.file("p/predictions.csv"));
  REQUIRE(preds.rows() == 5);
  CHECK((preds - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.out.find("mae 0") != std::string::npos);
  CHECK(read_json(tmp.file("p/report.json"))["mae"] == 0.0);

  CHECK(run_cli("predict --model " + tmp.file("model.json") + " --data " + tmp.file("x.csv") +
                " --horizon 2 --out " + tmp.file("p2")).code == 2);
}

TEST_CASE("printed mae matches a recomputation from the emitted files") {
  TempDir tmp;
  REQUIRE(run_cli("generate --n 80 --k 2 --d 2 --cov degree_bounded:1 --seed 17 --out " +
                  tmp.file("g")).code == 0);
  REQUIRE(run_cli("fit " + tmp.file("g/observations.csv") +
                  " --k 2 --lambda 1 --seed 1 --out " + tmp.file("f")).code == 0);
  const auto r = run_cli("predict --model " + tmp.file("f/model.json") + " --data " +
                         tmp.file("g/observations.csv") + " --out " + tmp.file("p"));
  REQUIRE(r.code == 0);
  const Matrix x = read_csv(tmp.file("g/observations.csv"));
  const Matrix preds = read_csv(tmp.file("p/predictions.csv"));
  REQUIRE(preds.rows() == x.rows());
  const double recomputed = mae(x.bottomRows(x.rows() - 1), preds.topRows(x.rows() - 1));
  CHECK(double(read_json(tmp.file("p/report.json"))["mae"]) == recomputed);
  REQUIRE(r.out.rfind("mae ", 0) == 0);
  CHECK(std::stod(r.out.substr(4)) == recomputed);
}

TEST_CASE("stream emits one record per row and a final model") {
  TempDir tmp;
  REQUIRE(run_cli("generate --n 46 --k 2 --d 2 --cov degree_bounded:1 --seed 19 --out " +
                  tmp.file("g")).code == 0);
  const Matrix all = read_csv(tmp.file("g/observations.csv"));
  write_csv(tmp.file("batch.csv"), all.topRows(40));

  std::ostringstream input;
  for (int t = 40; t < 43; ++t)
    input << format_double(all(t, 0)) << "," << format_double(all(t, 1)) << "\n";
  input << "oops,1\n";
  for (int t = 43; t < 45; ++t)
    input << format_double(all(t, 0)) << "," << format_double(all(t, 1)) << "\n";
  spit(tmp.file("input.txt"), input.str());

  const auto r = run_cli("stream --batch " + tmp.file("batch.csv") +
                         " --k 2 --lambda 1 --seed 3 --refit-stride 2 --out " + tmp.file("s"),
                         tmp.file("input.txt"));
  REQUIRE(r.code == 0);
  const auto records = lines_of(r.out);
  REQUIRE(records.size() == 6);
  long expect_t = 40;
  int refits = 0;
  for (const auto& line : records) {
    const Json rec = Json::parse(line);
    if (rec.contains("error")) {
      CHECK(rec["line"] == 4);
      continue;
    }
    CHECK(rec["t"] == expect_t++);
    REQUIRE(rec["gamma"].size() == 2);
    double sum = 0.0;
    for (const auto& v : rec["gamma"]) sum += double(v);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rec["prediction"].size() == 2);
    CHECK(rec.contains("label"));
    if (bool(rec["refit"])) ++refits;
  }
  CHECK(expect_t == 45);
  CHECK(refits == 2);  // stride 2 over 5 updates

  const ModelParams final_model = load_model(tmp.file("s/model.json"));
  validate_params(final_model);
  const Json manifest = read_json(tmp.file("s/manifest.json"));
  REQUIRE(manifest["outputs"].size() == 1);
  CHECK(manifest["outputs"][0]["path"] == "model.json");
}

TEST_CASE("stream with no rows reproduces the batch fit") {
  TempDir tmp;
  REQUIRE(run_cli("generate --n 40 --k 2 --d 2 --cov degree_bounded:1 --seed 23 --out " +
                  tmp.file("g")).code == 0);
  REQUIRE(run_cli("stream --batch " + tmp.file("g/observations.csv") +
                  " --k 2 --lambda 1 --seed 3 --out " + tmp.file("s")).code == 0);
  REQUIRE(run_cli("fit " + tmp.file("g/observations.csv") +
                  " --k 2 --lambda 1 --seed 3 --out " + tmp.file("f")).code == 0);
  CHECK(slurp(tmp.file("s/model.json")) == slurp(tmp.file("f/model.json")));
}

TEST_CASE("a window covering the whole stream matches the incremental mode") {
  TempDir tmp;
  REQUIRE(run_cli("generate --n 50 --k 2 --d 2 --cov degree_bounded:1 --seed 29 --out " +
                  tmp.file("g")).code == 0);
  const Matrix all = read_csv(tmp.file("g/observations.csv"));
  write_csv(tmp.file("batch.csv"), all.topRows(40));
  write_csv(tmp.file("input.txt"), all.bottomRows(10));

  const std::string common = " --k 2 --lambda 1 --seed 3 --refit-stride 3 ";
  const auto inc = run_cli("stream --batch " + tmp.file("batch.csv") + common + "--out " +
                           tmp.file("i"), tmp.file("input.txt"));
  const auto slide = run_cli("stream --batch " + tmp.file("batch.csv") + common +
                             "--mode slide --window 10000 --out " + tmp.file("w"),
                             tmp.file("input.txt"));
  REQUIRE(inc.code == 0);
  REQUIRE(slide.code == 0);
  CHECK(inc.out == slide.out);
  CHECK(slurp(tmp.file("i/model.json")) == slurp(tmp.file("w/model.json")));
}

TEST_CASE("a supplied model seeds the stream state") {
  TempDir tmp;
  REQUIRE(run_cli("generate --n 44 --k 2 --d 2 --cov degree_bounded:1 --seed 31 --out " +
                  tmp.file("g")).code == 0);
  const Matrix all = read_csv(tmp.file("g/observations.csv"));
  write_csv(tmp.file("batch.csv"), all.topRows(40));
  write_csv(tmp.file("input.txt"), all.bottomRows(4));
  REQUIRE(run_cli("fit " + tmp.file("batch.csv") + " --k 2 --lambda 1 --seed 3 --out " +
                  tmp.file("f")).code == 0);
  const auto r = run_cli("stream --batch " + tmp.file("batch.csv") + " --model " +
                         tmp.file("f/model.json") + " --k 2 --lambda 1 --out " + tmp.file("s"),
                         tmp.file("input.txt"));
  REQUIRE(r.code == 0);
  CHECK(lines_of(r.out).size() == 4);
  validate_params(load_model(tmp.file("s/model.json")));
}

TEST_CASE("the full pipeline is byte reproducible") {
  TempDir tmp;
  for (const std::string run : {"r1", "r2"}) {
    REQUIRE(run_cli("generate --n 100 --k 2 --d 3 --cov degree_bounded:2 --seed 21 --out " +
                    tmp.file(run + "/g")).code == 0);
    REQUIRE(run_cli("fit " + tmp.file(run + "/g/observations.csv") +
                    " --k 2 --lambda 2 --n-init 2 --seed 4 --out " +
                    tmp.file(run + "/f")).code == 0);
    REQUIRE(run_cli("evaluate --model " + tmp.file(run + "/f/model.json") + " --data " +
                    tmp.file(run + "/g/observations.csv") + " --labels " +
                    tmp.file(run + "/g/labels.txt") + " --truth " + tmp.file(run + "/g/truth.json") +
                    " --mae --out " + tmp.file(run + "/e")).code == 0);
  }
  for (const std::string f : {"g/observations.csv", "g/labels.txt", "g/truth.json",
                              "f/model.json", "f/report.json", "e/metrics.json"}) {
    CHECK(slurp(tmp.file("r1/" + f)) == slurp(tmp.file("r2/" + f)));
  }
}
