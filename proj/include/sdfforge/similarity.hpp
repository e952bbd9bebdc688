#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sdfforge/image.hpp"

namespace sdfforge {

class FrameSequence;

// Cosine of the mean-subtracted feature vectors; 0 when either is all-zero.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// 32x32 grayscale, mean-subtracted cosine. Constant images give 0.
// Throws ConfigError on resolution mismatch.
double builtin_similarity(const Image& a, const Image& b);

// Frame-to-frame similarity within one sequence, indices 1-based.
class SimilarityMetric {
 public:
  enum class Kind { builtin_luminance_cosine, external_embedding_table };

  static SimilarityMetric builtin();
  // Rows: `frame-id v1 ... vk`, frame-id = "<video_id>:<index>". Vectors must
  // be unit length within 1e-6. Throws ConfigError.
  static SimilarityMetric from_table(const std::filesystem::path& path);
  static SimilarityMetric from_table(std::map<std::string, std::vector<double>> table);

  Kind kind() const { return kind_; }
  double operator()(const FrameSequence& seq, int a, int b) const;

 private:
  Kind kind_ = Kind::builtin_luminance_cosine;
  std::shared_ptr<const std::map<std::string, std::vector<double>>> table_;
};

std::string frame_id(const std::string& video_id, int index);

}  // namespace sdfforge
