#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "sdfforge/image.hpp"
#include "sdfforge/similarity.hpp"

namespace sdfforge {

enum class FrameSource { simulated, ingested };

struct Frame {
  int index = 0;           // 1-based
  double timestamp = 0.0;  // s
  std::string path;        // as written into manifests
};

// Frames f_1..f_T of one video. Pixels come either from `images` (in-memory)
// or are read from root / path on first use.
class FrameSequence {
 public:
  FrameSequence() = default;
  FrameSequence(std::string video_id, FrameSource source, std::vector<Frame> frames,
                std::filesystem::path root = {});
  // In-memory sequence; frame paths become "<video_id>/<index>.png".
  static FrameSequence from_images(std::string video_id, std::vector<Image> images, double fps = 30.0);

  const std::string& video_id() const { return video_id_; }
  FrameSource source() const { return source_; }
  int length() const { return static_cast<int>(frames_.size()); }
  const Frame& frame(int index) const { return frames_.at(index - 1); }
  const std::vector<Frame>& frames() const { return frames_; }

  // Throws ConfigError: T >= 2, strictly increasing timestamps, uniform resolution.
  void validate() const;

  const Image& image(int index) const;
  const std::vector<double>& feature(int index) const;
  // Computes all luminance features in parallel.
  void warm_features() const;

 private:
  std::string video_id_;
  FrameSource source_ = FrameSource::ingested;
  std::vector<Frame> frames_;
  std::filesystem::path root_;
  mutable std::vector<std::shared_ptr<const Image>> images_;
  mutable std::vector<std::vector<double>> features_;
};

// Directory of per-video folders with numbered PNG frames plus `index.txt`
// rows `video_id frame_count fps`. Paths in the result are relative to
// `path_base` when the frames live under it.
std::vector<FrameSequence> ingest_frames(const std::filesystem::path& dir, FrameSource source,
                                         const std::filesystem::path& path_base);

struct Interval {
  int start = 1;
  int end = 1;
  int length() const { return end - start + 1; }
  int ground_truth() const { return end + 1; }
  bool operator==(const Interval&) const = default;
};

// Starts 1, 1+s, 1+2s, ... while end + 1 <= T. Throws SequenceTooShort.
std::vector<Interval> partition_intervals(int T, int L, int stride);

// {t in [1,T] : t outside [max(1, start - buffer), min(end + buffer, T)]}
std::vector<int> distractor_candidates(const Interval& interval, int T, int buffer);

struct ScoredFrame {
  int index = 0;
  double similarity = 0.0;
};

using SimilarityFn = std::function<double(int candidate, int ground_truth)>;

// Keeps candidates with sim(f_t, f_gt) < tau, in candidate order.
std::vector<ScoredFrame> prune_by_similarity(std::span<const int> candidates, int ground_truth,
                                             const SimilarityFn& sim, double tau);
std::vector<ScoredFrame> prune_by_similarity(std::span<const int> candidates, int ground_truth,
                                             const FrameSequence& seq, const SimilarityMetric& metric,
                                             double tau);

struct SkipRecord {
  std::string task;
  std::string video;
  int stride = 0;
  int interval = 0;  // 0-based interval number within (video, stride)
  std::string reason;
};

class SkipLog {
 public:
  void add(SkipRecord r);
  std::vector<SkipRecord> records() const;

 private:
  mutable std::mutex mu_;
  std::vector<SkipRecord> records_;
};

struct NfsItem {
  std::string id;
  std::string video;
  int stride = 0;
  int interval_number = 0;
  Interval interval;
  std::vector<int> context;          // frame indices
  std::vector<int> options;          // 4 frame indices, presented order
  char answer = 'A';
  std::vector<double> distractor_sims;  // per distractor, in option order
  std::uint64_t seed = 0;

  int answer_index() const { return answer - 'A'; }
};

struct TcvItem {
  std::string id;
  std::string video;
  int stride = 0;
  int interval_number = 0;
  Interval interval;
  std::vector<int> window;     // original frame indices
  std::vector<int> presented;  // frame indices shown to the model
  bool corrupted = false;
  std::optional<int> corrupt_pos;  // 0-based position in the window
  std::optional<int> source;       // replacement frame index
  std::optional<double> source_sim;
  std::uint64_t seed = 0;
};

struct ItemContext {
  std::string video;
  int stride = 0;
  int interval_number = 0;
};

// Needs |D'| >= 3; otherwise logs a skip and returns nullopt.
std::optional<NfsItem> build_nfs_item(const Interval& interval, const FrameSequence& seq,
                                      std::span<const ScoredFrame> pruned, std::uint64_t seed,
                                      const ItemContext& ctx, SkipLog& skips);

// corrupt => |D'| >= 1; otherwise logs a skip and returns nullopt.
std::optional<TcvItem> build_tcv_item(const Interval& window, const FrameSequence& seq,
                                      std::span<const ScoredFrame> pruned, std::uint64_t seed, bool corrupt,
                                      const ItemContext& ctx, SkipLog& skips);

enum class TcvBalance { exact, bernoulli };

struct BenchConfig {
  int context_length = 5;
  std::vector<int> strides{2, 4};
  int buffer = 3;  // exclusion radius around the interval, distinct from the stride
  double tau = 0.85;
  TcvBalance tcv_balance = TcvBalance::exact;
  double tcv_corrupt_prob = 0.5;
  std::uint64_t seed = 0;
};

// Per-item seed from (global seed, video, stride, interval, task tag).
std::uint64_t item_seed(std::uint64_t global, const std::string& video, int stride, int interval_number,
                        std::string_view task);

struct Benchmark {
  BenchConfig config;
  std::vector<NfsItem> nfs;
  std::vector<TcvItem> tcv;
  std::vector<SkipRecord> skips;
};

// Throws EmptyBenchmark when no item of either task is produced.
Benchmark build_benchmark(std::span<const FrameSequence> sequences, const SimilarityMetric& metric,
                          const BenchConfig& config);

nlohmann::json nfs_record(const NfsItem& item, const FrameSequence& seq);
nlohmann::json tcv_record(const TcvItem& item, const FrameSequence& seq);

// Writes nfs.jsonl, tcv.jsonl and manifest.json into `dir`.
void write_benchmark(const std::filesystem::path& dir, const Benchmark& bench,
                     std::span<const FrameSequence> sequences);

// One line per record, keys sorted, no trailing spaces.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace sdfforge
