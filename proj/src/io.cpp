#include "tagm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace tagm {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << bytes;
  if (!out) throw IoError("write failed for " + path);
}

double parse_double(const std::string& tok, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ": malformed number '" + tok + "'");
  }
}

}  // namespace

Matrix read_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(parse_double(tok, path));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path + ": ragged row at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv(const std::string& path, const Matrix& m, bool header) {
  std::ostringstream out;
  if (header) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? ",x" : "x") << j;
    out << "\n";
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << "\n";
  }
  spit(path, out.str());
}

IntVector read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  IntVector labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t pos = 0;
      const int v = std::stoi(line, &pos);
      if (pos != line.size() || v < 0) throw std::invalid_argument(line);
      labels.push_back(v);
    } catch (const std::exception&) {
      throw IoError(path + ": malformed label '" + line + "'");
    }
  }
  if (labels.empty()) throw IoError(path + ": no labels");
  return labels;
}

void write_labels(const std::string& path, const IntVector& labels) {
  std::ostringstream out;
  for (int l : labels) out << l << "\n";
  spit(path, out.str());
}

namespace {

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Vector vector_from_json(const Json& a) {
  if (!a.is_array()) throw IoError("model json: expected array");
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

Matrix matrix_from_json(const Json& a) {
  if (!a.is_array() || a.empty()) throw IoError("model json: expected array of rows");
  Matrix m(a.size(), a[0].size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != a[0].size()) throw IoError("model json: ragged matrix");
    for (std::size_t j = 0; j < a[i].size(); ++j) m(i, j) = a[i][j].get<double>();
  }
  return m;
}

Json precision_to_json(const SymMatrix& theta) {
  Json t = Json::object();
  t["dim"] = theta.dim();
  Json triplets = Json::array();
  for (Eigen::Index i = 0; i < theta.dim(); ++i)
    for (Eigen::Index j = i; j < theta.dim(); ++j)
      if (theta(i, j) != 0.0) triplets.push_back(Json::array({i, j, theta(i, j)}));
  t["triplets"] = std::move(triplets);
  return t;
}

SymMatrix precision_from_json(const Json& t) {
  if (!t.contains("dim") || !t.contains("triplets")) throw IoError("model json: bad precision");
  const Eigen::Index d = t["dim"].get<Eigen::Index>();
  if (d < 1) throw IoError("model json: bad precision dim");
  Matrix m = Matrix::Zero(d, d);
  for (const auto& tr : t["triplets"]) {
    if (!tr.is_array() || tr.size() != 3) throw IoError("model json: bad triplet");
    const Eigen::Index i = tr[0].get<Eigen::Index>();
    const Eigen::Index j = tr[1].get<Eigen::Index>();
    if (i < 0 || j < i || j >= d) throw IoError("model json: triplet outside upper triangle");
    m(i, j) = m(j, i) = tr[2].get<double>();
  }
  return SymMatrix(m);
}

}  // namespace

Json model_to_json(const ModelParams& p) {
  Json j = Json::object();
  j["k"] = p.n_states();
  j["d"] = p.dim();
  j["pi"] = vector_to_json(p.pi);
  j["a"] = matrix_to_json(p.a);
  Json means = Json::array();
  for (const auto& m : p.means) means.push_back(vector_to_json(m));
  j["means"] = std::move(means);
  Json precisions = Json::array();
  for (const auto& t : p.precisions) precisions.push_back(precision_to_json(t));
  j["precisions"] = std::move(precisions);
  return j;
}

ModelParams model_from_json(const Json& j) {
  for (const char* key : {"k", "d", "pi", "a", "means", "precisions"})
    if (!j.contains(key)) throw IoError(std::string("model json: missing field ") + key);
  const int k = j["k"].get<int>();
  const int d = j["d"].get<int>();
  if (k < 1 || d < 1) throw IoError("model json: bad shape");
  ModelParams p;
  p.pi = vector_from_json(j["pi"]);
  p.a = matrix_from_json(j["a"]);
  for (const auto& m : j["means"]) p.means.push_back(vector_from_json(m));
  for (const auto& t : j["precisions"]) p.precisions.push_back(precision_from_json(t));
  if (p.pi.size() != k || p.a.rows() != k || static_cast<int>(p.means.size()) != k ||
      static_cast<int>(p.precisions.size()) != k)
    throw IoError("model json: k does not match payload");
  for (const auto& m : p.means)
    if (m.size() != d) throw IoError("model json: d does not match payload");
  validate_params(p);
  return p;
}

void save_model(const std::string& path, const ModelParams& p) {
  write_json(path, model_to_json(p));
}

ModelParams load_model(const std::string& path) { return model_from_json(read_json(path)); }

Json truth_to_json(const SyntheticDataset& data) {
  ModelParams p;
  p.pi = data.truth.pi;
  p.a = data.truth.a;
  p.means = data.truth.means;
  p.precisions = data.truth.precisions;
  Json j = model_to_json(p);
  j["weights"] = matrix_to_json(data.weights);
  return j;
}

TruthFile truth_from_json(const Json& j) {
  TruthFile t;
  t.params = model_from_json(j);
  if (!j.contains("weights")) throw IoError("truth json: missing weights");
  t.weights = matrix_from_json(j["weights"]);
  return t;
}

void write_json(const std::string& path, const Json& j) { spit(path, j.dump(2) + "\n"); }

Json read_json(const std::string& path) {
  try {
    return Json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string digest_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest_file(const std::string& path) { return digest_bytes(slurp(path)); }

}  // namespace tagm
