#include "sdfforge/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sdfforge/bench.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/kernels.hpp"

namespace sdfforge {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double builtin_similarity(const Image& a, const Image& b) {
  if (a.resolution() != b.resolution()) throw ConfigError("similarity: frame resolutions differ");
  return cosine(kernels::luminance_feature(a), kernels::luminance_feature(b));
}

std::string frame_id(const std::string& video_id, int index) { return video_id + ":" + std::to_string(index); }

SimilarityMetric SimilarityMetric::builtin() { return SimilarityMetric{}; }

SimilarityMetric SimilarityMetric::from_table(std::map<std::string, std::vector<double>> table) {
  std::size_t dim = 0;
  for (const auto& [id, v] : table) {
    if (dim == 0) dim = v.size();
    if (v.empty() || v.size() != dim) throw ConfigError("embedding table: inconsistent dimension at " + id);
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6) throw ConfigError("embedding table: non-unit vector for " + id);
  }
  SimilarityMetric m;
  m.kind_ = Kind::external_embedding_table;
  m.table_ = std::make_shared<const std::map<std::string, std::vector<double>>>(std::move(table));
  return m;
}

SimilarityMetric SimilarityMetric::from_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding table " + path.string());
  std::map<std::string, std::vector<double>> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string id;
    if (!(ss >> id) || id.starts_with('#')) continue;
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (!ss.eof()) throw ConfigError("embedding table line " + std::to_string(lineno) + ": bad number");
    table[id] = std::move(v);
  }
  return from_table(std::move(table));
}

double SimilarityMetric::operator()(const FrameSequence& seq, int a, int b) const {
  if (kind_ == Kind::builtin_luminance_cosine) return cosine(seq.feature(a), seq.feature(b));
  const auto lookup = [&](int idx) -> const std::vector<double>& {
    const auto it = table_->find(frame_id(seq.video_id(), idx));
    if (it == table_->end()) throw ConfigError("embedding table has no row for " + frame_id(seq.video_id(), idx));
    return it->second;
  };
  const auto& va = lookup(a);
  const auto& vb = lookup(b);
  double ab = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) ab += va[i] * vb[i];
  return std::clamp(ab, -1.0, 1.0);
}

}  // namespace sdfforge
