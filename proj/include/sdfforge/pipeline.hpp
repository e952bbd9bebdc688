#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sdfforge/config.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/metrics.hpp"

namespace sdfforge {

inline constexpr const char* kOutEnv = "SDF_FORGE_OUT";
inline constexpr const char* kDefaultOut = "sdf-forge-out";

struct RunOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  int jobs = 0;  // 0: OpenMP default
};

// --out, then $SDF_FORGE_OUT, then ./sdf-forge-out.
std::filesystem::path output_root(const RunOptions& opts);

// Loads --config (or the built-in defaults) and applies --seed.
ForgeConfig resolve_config(const RunOptions& opts);

struct StageReport {
  std::string stage;
  bool skipped = false;  // outputs already current
  int videos = 0;
  long frames = 0;
  long items = 0;
  double seconds = 0.0;
  std::string summary() const;
};

// Stage stamps live in <root>/stages/<stage>.json and list every file the
// stage wrote. A stage is current when its stamp matches the config and its
// upstream stamps; current stages are skipped unless `force`.
StageReport cmd_simulate(const ForgeConfig& cfg, const std::filesystem::path& root, bool force);
StageReport cmd_render_sdf(const ForgeConfig& cfg, const std::filesystem::path& root, bool force);
StageReport cmd_build_bench(const ForgeConfig& cfg, const std::filesystem::path& root, bool force);
StageReport cmd_emit_sft(const ForgeConfig& cfg, const std::filesystem::path& root, bool force);

// simulate, render-sdf, build-bench, emit-sft. A failing stage is rethrown as
// StageFailed naming it.
std::vector<StageReport> cmd_pipeline(const ForgeConfig& cfg, const std::filesystem::path& root, bool force);

class StageFailed : public Error {
 public:
  StageFailed(std::string stage, std::exception_ptr cause, const std::string& message)
      : Error("stage " + stage + " failed: " + message), stage_(std::move(stage)), cause_(std::move(cause)) {}
  const std::string& stage() const { return stage_; }
  const std::exception_ptr& cause() const { return cause_; }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

// Writes score.json and score.txt into out_dir.
ScoreReport cmd_score(const std::filesystem::path& manifest, const std::filesystem::path& predictions,
                      const std::filesystem::path& out_dir, IntervalMode mode = IntervalMode::normal95);

// Closure (every file listed by exactly one stage stamp), checksums, and
// manifest references. Empty result means the tree is intact.
std::vector<std::string> cmd_verify(const std::filesystem::path& root);

}  // namespace sdfforge
