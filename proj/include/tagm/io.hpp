#pragma once

#include <json.hpp>
#include <string>

#include "tagm/hmm.hpp"
#include "tagm/synthgen.hpp"

namespace tagm {

using Json = nlohmann::ordered_json;

// CSV of doubles, comma separated, 17 significant digits on write so values
// survive a round trip bit for bit. No header unless asked.
Matrix read_csv(const std::string& path, bool header = false);
void write_csv(const std::string& path, const Matrix& m, bool header = false);

IntVector read_labels(const std::string& path);
void write_labels(const std::string& path, const IntVector& labels);

// Model schema: {k, d, pi, a, means, precisions}, precisions sparse as
// {dim, triplets: [[i, j, value], ...]} over nonzero entries with i <= j.
Json model_to_json(const ModelParams& p);
ModelParams model_from_json(const Json& j);
void save_model(const std::string& path, const ModelParams& p);
ModelParams load_model(const std::string& path);

// Ground truth: the model schema fields plus the blending weights matrix.
Json truth_to_json(const SyntheticDataset& data);
struct TruthFile {
  ModelParams params;  // precisions from the stored sparse triplets
  Matrix weights;
};
TruthFile truth_from_json(const Json& j);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

// FNV-1a 64 bit content digest, hex encoded.
std::string digest_bytes(const std::string& bytes);
std::string digest_file(const std::string& path);

std::string format_double(double v);  // 17 significant digits

}  // namespace tagm
