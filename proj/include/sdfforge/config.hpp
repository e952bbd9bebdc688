#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdfforge/bench.hpp"
#include "sdfforge/camera.hpp"
#include "sdfforge/sdf.hpp"
#include "sdfforge/sft.hpp"
#include "sdfforge/sim.hpp"

namespace sdfforge {

// `key = value` lines; `#` starts a comment. Keys are dotted paths.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& source = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

inline constexpr int kCameraViews = 5;

SimScene preset_scene(const std::string& name);  // throws ConfigError
std::vector<std::string> preset_names();

// One of five fixed views around the container.
CameraModel camera_view(int view, const Box& container, Resolution res);

struct VideoSpec {
  std::string id;
  SimScene scene;
  CameraModel camera;
  RgbStyle style;
  SdfParams sdf;
};

struct ForgeConfig {
  std::string preset = "pour_low_viscosity";
  int videos = 1;
  bool vary = true;
  std::uint64_t seed = 0;
  KeyValues overrides;  // scene.*, camera.*, render.*, sdf.* as given

  bool sdf_sidecar = false;
  BenchConfig bench;
  std::string embeddings;  // optional external embedding table
  SftConfig sft;
};

// Throws ConfigError for unknown keys or invalid values.
ForgeConfig parse_config(const KeyValues& kv);
ForgeConfig load_config(const std::filesystem::path& path);

// Applies the global seed to every seeded section.
void set_seed(ForgeConfig& cfg, std::uint64_t seed);

// Per-video scene/camera/style, with seeded variation when cfg.vary.
std::vector<VideoSpec> plan_videos(const ForgeConfig& cfg);

// Round-trips a single video through the key/value format.
KeyValues video_to_kv(const VideoSpec& video);
VideoSpec video_from_kv(const KeyValues& kv);

}  // namespace sdfforge
