#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sdfforge/bench.hpp"

namespace sdfforge {

enum class SftTask { dynamic_perception, sdf_cot, nfs, tcv };
enum class Provenance { expert, self, unlabeled };
enum class FrameKind { rgb, sdf };

std::string_view to_string(SftTask t);
std::string_view to_string(Provenance p);

struct FrameRef {
  std::string path;
  FrameKind kind = FrameKind::rgb;
  bool operator==(const FrameRef&) const = default;
};

struct SftItem {
  std::string id;
  SftTask task = SftTask::nfs;
  std::vector<FrameRef> frames;
  std::vector<FrameRef> candidates;
  std::string prompt_id;
  std::string answer;
  std::optional<std::string> reasoning;
  Provenance provenance = Provenance::unlabeled;
};

// One true SDF among n shuffled options. Needs distractors.size() >= n - 1;
// otherwise logs a skip and returns nullopt.
std::optional<SftItem> build_dynamic_perception_item(std::span<const std::string> rgb_sequence,
                                                     const std::string& true_sdf,
                                                     std::span<const std::string> distractor_sdfs, int n,
                                                     std::uint64_t seed, const std::string& id, SkipLog& skips);

// [f_1 .. f_t (rgb), sdf(f_t)]
std::vector<FrameRef> build_sdf_cot_sequence(std::span<const std::string> frames, const std::string& sdf_of_last);

struct MixRatio {
  long expert = 1;
  long self = 10;
};

struct MixManifest {
  MixRatio ratio;
  std::vector<std::string> expert_ids;
  std::vector<std::string> self_ids;
  long total = 0;
  std::uint64_t seed = 0;
};

// round(total * e / (e + s)), halves rounded up.
long expert_count(long total, MixRatio ratio);

// Seeded sampling without replacement; self ids never repeat expert ids.
// Throws PoolShortfall naming the deficient pool.
MixManifest mix_manifest(std::span<const std::string> expert_pool, std::span<const std::string> self_pool,
                         MixRatio ratio, long total, std::uint64_t seed);

nlohmann::json mix_json(const MixManifest& mix);

// Bundled prompt text: nfs_cot, tcv_cot, self_annotate, expert_annotate,
// ablation_1..ablation_5. Throws ConfigError for unknown ids.
std::string_view emit_prompt(std::string_view task);
std::vector<std::string_view> prompt_ids();

struct SftConfig {
  int dynamic_perception = 10;
  int sdf_cot = 10;
  int nfs = 10;
  int tcv = 10;
  int options = 4;       // N for dynamic perception
  MixRatio mix_ratio{1, 10};
  long mix_total = -1;   // < 0: all emitted items
  double tau = 0.85;
  int buffer = 3;
  std::uint64_t seed = 0;
};

struct SftLayout {
  std::filesystem::path root;       // artifact root; manifest paths are relative to it
  std::filesystem::path bench_dir;  // nfs.jsonl, tcv.jsonl
  std::filesystem::path sdf_dir;    // <video>/<frame>.png + index.txt
  std::filesystem::path out_dir;    // dataset/
};

struct SftResult {
  std::vector<SftItem> items;
  MixManifest mix;
  std::vector<SkipRecord> skips;
};

// Writes out_dir/{task}/{item_id}/{frames..., item.json}, out_dir/manifest.jsonl
// and out_dir/mix.json. Throws IntegrityError on a missing source file.
SftResult emit_sft_dataset(const SftLayout& layout, const SftConfig& config);

nlohmann::json sft_record(const SftItem& item);

// Every path in manifest.jsonl must resolve under dataset_dir. Returns the
// offending paths.
std::vector<std::string> check_sft_integrity(const std::filesystem::path& dataset_dir);

}  // namespace sdfforge
