#include "sdfforge/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "sdfforge/error.hpp"
#include "sdfforge/rng.hpp"

namespace sdfforge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt_vec(const Vec3& v) { return fmt_double(v.x) + "," + fmt_double(v.y) + "," + fmt_double(v.z); }

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("config key `" + key + "` = `" + value + "`: expected " + expected);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) bad(key, v, "a finite number");
    return d;
  } catch (const std::logic_error&) {
    bad(key, v, "a number");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) bad(key, v, "an integer");
    return d;
  } catch (const std::logic_error&) {
    bad(key, v, "an integer");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') bad(key, v, "a non-negative integer");
    const auto d = std::stoull(v, &pos);
    if (pos != v.size()) bad(key, v, "a non-negative integer");
    return d;
  } catch (const std::logic_error&) {
    bad(key, v, "a non-negative integer");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "true/false");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(trim(part));
  return out;
}

Vec3 to_vec3(const std::string& key, const std::string& v) {
  const auto p = split(v, ',');
  if (p.size() != 3) bad(key, v, "x,y,z");
  return {to_double(key, p[0]), to_double(key, p[1]), to_double(key, p[2])};
}

Rgb to_rgb(const std::string& key, const std::string& v) {
  const auto p = split(v, ',');
  if (p.size() != 3) bad(key, v, "r,g,b");
  auto c = [&](const std::string& s) {
    const long x = to_long(key, s);
    if (x < 0 || x > 255) bad(key, v, "components in 0..255");
    return static_cast<std::uint8_t>(x);
  };
  return {c(p[0]), c(p[1]), c(p[2])};
}

Resolution to_res(const std::string& key, const std::string& v) {
  const auto p = split(v, 'x');
  if (p.size() != 2) bad(key, v, "WIDTHxHEIGHT");
  return {static_cast<int>(to_long(key, p[0])), static_cast<int>(to_long(key, p[1]))};
}

Viscosity to_viscosity(const std::string& key, const std::string& v) {
  if (v == "low") return Viscosity::low;
  if (v == "medium") return Viscosity::medium;
  if (v == "high") return Viscosity::high;
  bad(key, v, "low|medium|high");
}

std::string_view name_of(Viscosity v) {
  switch (v) {
    case Viscosity::low:
      return "low";
    case Viscosity::medium:
      return "medium";
    case Viscosity::high:
      return "high";
  }
  return "low";
}

Background to_background(const std::string& key, const std::string& v) {
  if (v == "blank") return Background::blank;
  if (v == "indoor") return Background::indoor;
  if (v == "outdoor") return Background::outdoor;
  bad(key, v, "blank|indoor|outdoor");
}

std::string_view name_of(Background b) {
  switch (b) {
    case Background::blank:
      return "blank";
    case Background::indoor:
      return "indoor";
    case Background::outdoor:
      return "outdoor";
  }
  return "blank";
}

std::string rgb_str(Rgb c) { return std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b); }

using Setter = std::function<void(VideoSpec&, const std::string& key, const std::string& value)>;

// Keys that shape a single video. camera.view is handled separately because it
// replaces the whole camera pose.
const std::map<std::string, Setter>& video_keys() {
  static const std::map<std::string, Setter> keys = {
      {"scene.container.min", [](VideoSpec& v, auto& k, auto& x) { v.scene.container.min = to_vec3(k, x); }},
      {"scene.container.max", [](VideoSpec& v, auto& k, auto& x) { v.scene.container.max = to_vec3(k, x); }},
      {"scene.emitter.position", [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.position = to_vec3(k, x); }},
      {"scene.emitter.direction", [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.direction = to_vec3(k, x); }},
      {"scene.emitter.speed", [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.speed = to_double(k, x); }},
      {"scene.emitter.rate", [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.rate = static_cast<int>(to_long(k, x)); }},
      {"scene.emitter.active_steps",
       [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.active_steps = static_cast<int>(to_long(k, x)); }},
      {"scene.emitter.jitter", [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.jitter = to_double(k, x); }},
      {"scene.emitter.spread", [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.spread = to_double(k, x); }},
      {"scene.emitter.swirl", [](VideoSpec& v, auto& k, auto& x) { v.scene.emitter.swirl = to_double(k, x); }},
      {"scene.gravity", [](VideoSpec& v, auto& k, auto& x) { v.scene.gravity = to_vec3(k, x); }},
      {"scene.viscosity", [](VideoSpec& v, auto& k, auto& x) { v.scene.viscosity = to_viscosity(k, x); }},
      {"scene.restitution", [](VideoSpec& v, auto& k, auto& x) { v.scene.restitution = to_double(k, x); }},
      {"scene.dt", [](VideoSpec& v, auto& k, auto& x) { v.scene.dt = to_double(k, x); }},
      {"scene.steps", [](VideoSpec& v, auto& k, auto& x) { v.scene.steps = static_cast<int>(to_long(k, x)); }},
      {"scene.seed", [](VideoSpec& v, auto& k, auto& x) { v.scene.seed = to_u64(k, x); }},
      {"scene.v_max", [](VideoSpec& v, auto& k, auto& x) { v.scene.v_max = to_double(k, x); }},
      {"scene.liquid_color", [](VideoSpec& v, auto& k, auto& x) { v.scene.liquid_color = to_rgb(k, x); }},
      {"scene.background", [](VideoSpec& v, auto& k, auto& x) { v.scene.background = to_background(k, x); }},
      {"camera.position", [](VideoSpec& v, auto& k, auto& x) { v.camera.position = to_vec3(k, x); }},
      {"camera.look_at", [](VideoSpec& v, auto& k, auto& x) { v.camera.look_at = to_vec3(k, x); }},
      {"camera.up", [](VideoSpec& v, auto& k, auto& x) { v.camera.up = to_vec3(k, x); }},
      {"camera.focal_length", [](VideoSpec& v, auto& k, auto& x) { v.camera.focal_length = to_double(k, x); }},
      {"camera.near_plane", [](VideoSpec& v, auto& k, auto& x) { v.camera.near_plane = to_double(k, x); }},
      {"render.particle_radius", [](VideoSpec& v, auto& k, auto& x) { v.style.particle_radius_px = to_double(k, x); }},
      {"render.draw_container", [](VideoSpec& v, auto& k, auto& x) { v.style.draw_container = to_bool(k, x); }},
      {"sdf.kappa", [](VideoSpec& v, auto& k, auto& x) { v.sdf.kappa = to_double(k, x); }},
      {"sdf.alpha", [](VideoSpec& v, auto& k, auto& x) { v.sdf.alpha = to_double(k, x); }},
      {"sdf.splat_radius", [](VideoSpec& v, auto& k, auto& x) { v.sdf.splat_radius = to_double(k, x); }},
      {"sdf.v_ref", [](VideoSpec& v, auto& k, auto& x) { v.sdf.v_ref = to_double(k, x); }},
      {"sdf.dim", [](VideoSpec& v, auto& k, auto& x) { v.sdf.dim = to_double(k, x); }},
      {"sdf.normalization",
       [](VideoSpec& v, auto& k, auto& x) {
         if (x == "fixed_max") {
           v.sdf.normalization = Normalization::fixed_max;
         } else if (x == "per_frame_max") {
           v.sdf.normalization = Normalization::per_frame_max;
         } else {
           bad(k, x, "fixed_max|per_frame_max");
         }
       }},
      {"sdf.integrand",
       [](VideoSpec& v, auto& k, auto& x) {
         if (x == "speed") {
           v.sdf.integrand = Integrand::speed;
         } else if (x == "projected") {
           v.sdf.integrand = Integrand::projected;
         } else {
           bad(k, x, "speed|projected");
         }
       }},
  };
  return keys;
}

const std::set<std::string>& pipeline_keys() {
  static const std::set<std::string> keys = {
      "preset",          "videos",          "vary",          "seed",          "camera.view",
      "camera.resolution", "sdf.sidecar",   "bench.context_length", "bench.strides", "bench.buffer",
      "bench.tau",       "bench.tcv_balance", "bench.tcv_corrupt_prob", "bench.embeddings",
      "sft.dynamic_perception", "sft.sdf_cot", "sft.nfs", "sft.tcv", "sft.options", "sft.mix_ratio",
      "sft.mix_total",   "sft.tau",         "sft.buffer"};
  return keys;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValues::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::vector<std::string> preset_names() {
  return {"pour_low_viscosity", "pour_medium_viscosity", "pour_high_viscosity",
          "stir_low_viscosity", "stir_medium_viscosity", "stir_high_viscosity"};
}

SimScene preset_scene(const std::string& name) {
  SimScene s;
  s.container = {{-0.3, 0.0, -0.3}, {0.3, 0.6, 0.3}};
  s.gravity = {0.0, -9.8, 0.0};
  s.dt = 1.0 / 60.0;
  s.steps = 60;
  s.v_max = 20.0;
  s.background = Background::blank;

  std::string kind, visc;
  if (name.starts_with("pour_")) {
    kind = "pour";
    visc = name.substr(5);
  } else if (name.starts_with("stir_")) {
    kind = "stir";
    visc = name.substr(5);
  } else {
    throw ConfigError("unknown preset `" + name + "`");
  }
  if (visc == "low_viscosity") {
    s.viscosity = Viscosity::low;
    s.liquid_color = {50, 110, 215};
  } else if (visc == "medium_viscosity") {
    s.viscosity = Viscosity::medium;
    s.liquid_color = {205, 165, 40};
  } else if (visc == "high_viscosity") {
    s.viscosity = Viscosity::high;
    s.liquid_color = {180, 105, 20};
  } else {
    throw ConfigError("unknown preset `" + name + "`");
  }

  if (kind == "pour") {
    s.emitter.position = {-0.18, 0.52, 0.0};
    s.emitter.direction = {0.35, -1.0, 0.0};
    s.emitter.speed = 1.2;
    s.emitter.rate = 10;
    s.emitter.jitter = 0.012;
    s.emitter.spread = 0.06;
    s.restitution = 0.15;
  } else {
    s.emitter.position = {0.15, 0.06, 0.0};
    s.emitter.direction = {0.0, 0.12, 1.0};
    s.emitter.speed = 1.0;
    s.emitter.rate = 8;
    s.emitter.jitter = 0.01;
    s.emitter.spread = 0.05;
    s.emitter.swirl = 0.2;
    s.restitution = 0.3;
  }
  return s;
}

CameraModel camera_view(int view, const Box& container, Resolution res) {
  const Vec3 c = container.center();
  const Vec3 size = container.max - container.min;
  const double scale = std::max({size.x, size.y, size.z}) / 0.6;
  static const Vec3 offsets[kCameraViews] = {
      {0.0, 0.15, 1.6}, {-0.92, 0.2, 1.31}, {0.92, 0.2, 1.31}, {0.0, 0.95, 1.2}, {1.3, 0.05, 0.95}};
  CameraModel cam;
  const Vec3 target = c - Vec3{0.0, 0.04 * scale, 0.0};
  cam.position = c + offsets[((view % kCameraViews) + kCameraViews) % kCameraViews] * scale;
  cam.look_at = target;
  cam.up = {0.0, 1.0, 0.0};
  cam.resolution = res;
  cam.focal_length = 1.05 * res.width;
  cam.near_plane = 0.05;
  return cam;
}

ForgeConfig parse_config(const KeyValues& kv) {
  ForgeConfig cfg;
  for (const auto& [k, v] : kv.values()) {
    if (!video_keys().count(k) && !pipeline_keys().count(k)) throw ConfigError("unknown config key `" + k + "`");
  }
  auto str = [&](const std::string& k) { return *kv.get(k); };
  if (kv.has("preset")) cfg.preset = str("preset");
  if (kv.has("videos")) cfg.videos = static_cast<int>(to_long("videos", str("videos")));
  if (cfg.videos < 1) throw ConfigError("config key `videos` must be >= 1");
  if (kv.has("vary")) cfg.vary = to_bool("vary", str("vary"));
  if (kv.has("seed")) cfg.seed = to_u64("seed", str("seed"));
  if (kv.has("sdf.sidecar")) cfg.sdf_sidecar = to_bool("sdf.sidecar", str("sdf.sidecar"));

  auto& b = cfg.bench;
  if (kv.has("bench.context_length")) b.context_length = static_cast<int>(to_long("bench.context_length", str("bench.context_length")));
  if (kv.has("bench.strides")) {
    b.strides.clear();
    for (const auto& p : split(str("bench.strides"), ',')) b.strides.push_back(static_cast<int>(to_long("bench.strides", p)));
  }
  if (kv.has("bench.buffer")) b.buffer = static_cast<int>(to_long("bench.buffer", str("bench.buffer")));
  if (kv.has("bench.tau")) b.tau = to_double("bench.tau", str("bench.tau"));
  if (kv.has("bench.tcv_balance")) {
    const auto v = str("bench.tcv_balance");
    if (v == "exact") {
      b.tcv_balance = TcvBalance::exact;
    } else if (v == "bernoulli") {
      b.tcv_balance = TcvBalance::bernoulli;
    } else {
      bad("bench.tcv_balance", v, "exact|bernoulli");
    }
  }
  if (kv.has("bench.tcv_corrupt_prob")) b.tcv_corrupt_prob = to_double("bench.tcv_corrupt_prob", str("bench.tcv_corrupt_prob"));
  if (kv.has("bench.embeddings")) cfg.embeddings = str("bench.embeddings");
  if (b.context_length < 1) throw ConfigError("bench.context_length must be >= 1");
  if (b.buffer < 0) throw ConfigError("bench.buffer must be >= 0");
  if (b.strides.empty()) throw ConfigError("bench.strides must not be empty");
  for (int s : b.strides) {
    if (s < 1) throw ConfigError("bench.strides must be >= 1");
  }
  if (!(b.tau >= -1.0 && b.tau <= 1.0)) throw ConfigError("bench.tau must be in [-1,1]");
  if (!(b.tcv_corrupt_prob >= 0.0 && b.tcv_corrupt_prob <= 1.0)) throw ConfigError("bench.tcv_corrupt_prob must be in [0,1]");

  auto& s = cfg.sft;
  auto count = [&](const std::string& k, int& dst) {
    if (!kv.has(k)) return;
    dst = static_cast<int>(to_long(k, str(k)));
    if (dst < 0) throw ConfigError(k + " must be >= 0");
  };
  count("sft.dynamic_perception", s.dynamic_perception);
  count("sft.sdf_cot", s.sdf_cot);
  count("sft.nfs", s.nfs);
  count("sft.tcv", s.tcv);
  count("sft.options", s.options);
  if (s.options < 2) throw ConfigError("sft.options must be >= 2");
  if (kv.has("sft.mix_ratio")) {
    const auto p = split(str("sft.mix_ratio"), ':');
    if (p.size() != 2) bad("sft.mix_ratio", str("sft.mix_ratio"), "EXPERT:SELF");
    s.mix_ratio = {to_long("sft.mix_ratio", p[0]), to_long("sft.mix_ratio", p[1])};
    if (s.mix_ratio.expert < 0 || s.mix_ratio.self < 0 || s.mix_ratio.expert + s.mix_ratio.self == 0) {
      bad("sft.mix_ratio", str("sft.mix_ratio"), "non-negative parts, not both zero");
    }
  }
  if (kv.has("sft.mix_total")) s.mix_total = to_long("sft.mix_total", str("sft.mix_total"));
  s.tau = kv.has("sft.tau") ? to_double("sft.tau", str("sft.tau")) : b.tau;
  s.buffer = kv.has("sft.buffer") ? static_cast<int>(to_long("sft.buffer", str("sft.buffer"))) : b.buffer;

  for (const auto& [k, v] : kv.values()) {
    if (video_keys().count(k) || k == "camera.view" || k == "camera.resolution") cfg.overrides.set(k, v);
  }
  set_seed(cfg, cfg.seed);
  plan_videos(cfg);  // validates scene, camera and sdf sections
  return cfg;
}

ForgeConfig load_config(const std::filesystem::path& path) { return parse_config(KeyValues::load(path)); }

void set_seed(ForgeConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.bench.seed = seed;
  cfg.sft.seed = mix_seed(seed, hash_string("sft"));
}

std::vector<VideoSpec> plan_videos(const ForgeConfig& cfg) {
  static const Rgb palette[4] = {{50, 110, 215}, {205, 165, 40}, {180, 105, 20}, {200, 60, 70}};
  static const double speed_factor[5] = {1.0, 0.85, 1.15, 0.9, 1.1};
  const auto& ov = cfg.overrides;
  const Resolution res =
      ov.has("camera.resolution") ? to_res("camera.resolution", *ov.get("camera.resolution")) : Resolution{128, 128};
  const int base_view = ov.has("camera.view") ? static_cast<int>(to_long("camera.view", *ov.get("camera.view"))) : 0;

  std::vector<VideoSpec> out;
  for (int k = 0; k < cfg.videos; ++k) {
    VideoSpec v;
    char id[16];
    std::snprintf(id, sizeof(id), "v%03d", k);
    v.id = id;
    v.scene = preset_scene(cfg.preset);
    v.scene.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(k));
    int view = base_view;
    if (cfg.vary) {
      v.scene.viscosity = static_cast<Viscosity>(k % 3);
      v.scene.background = static_cast<Background>((k / 3) % 3);
      v.scene.liquid_color = palette[k % 4];
      v.scene.emitter.speed *= speed_factor[k % 5];
      view = base_view + k;
    }
    v.camera = camera_view(view, v.scene.container, res);
    for (const auto& [key, value] : ov.values()) {
      if (const auto it = video_keys().find(key); it != video_keys().end()) it->second(v, key, value);
    }
    if (!ov.has("camera.focal_length")) v.camera.focal_length = 1.05 * res.width;
    if (!ov.has("sdf.v_ref")) v.sdf.v_ref = 1.5 * v.scene.emitter.speed;
    v.scene.validate();
    v.camera.validate();
    v.sdf.validate();
    if (!(v.style.particle_radius_px >= 0.0)) throw ConfigError("render.particle_radius must be >= 0");
    out.push_back(std::move(v));
  }
  return out;
}

KeyValues video_to_kv(const VideoSpec& v) {
  KeyValues kv;
  const auto& s = v.scene;
  kv.set("video", v.id);
  kv.set("scene.container.min", fmt_vec(s.container.min));
  kv.set("scene.container.max", fmt_vec(s.container.max));
  kv.set("scene.emitter.position", fmt_vec(s.emitter.position));
  kv.set("scene.emitter.direction", fmt_vec(s.emitter.direction));
  kv.set("scene.emitter.speed", fmt_double(s.emitter.speed));
  kv.set("scene.emitter.rate", std::to_string(s.emitter.rate));
  kv.set("scene.emitter.active_steps", std::to_string(s.emitter.active_steps));
  kv.set("scene.emitter.jitter", fmt_double(s.emitter.jitter));
  kv.set("scene.emitter.spread", fmt_double(s.emitter.spread));
  kv.set("scene.emitter.swirl", fmt_double(s.emitter.swirl));
  kv.set("scene.gravity", fmt_vec(s.gravity));
  kv.set("scene.viscosity", std::string(name_of(s.viscosity)));
  kv.set("scene.restitution", fmt_double(s.restitution));
  kv.set("scene.dt", fmt_double(s.dt));
  kv.set("scene.steps", std::to_string(s.steps));
  kv.set("scene.seed", std::to_string(s.seed));
  kv.set("scene.v_max", fmt_double(s.v_max));
  kv.set("scene.liquid_color", rgb_str(s.liquid_color));
  kv.set("scene.background", std::string(name_of(s.background)));
  kv.set("camera.position", fmt_vec(v.camera.position));
  kv.set("camera.look_at", fmt_vec(v.camera.look_at));
  kv.set("camera.up", fmt_vec(v.camera.up));
  kv.set("camera.focal_length", fmt_double(v.camera.focal_length));
  kv.set("camera.resolution", std::to_string(v.camera.resolution.width) + "x" + std::to_string(v.camera.resolution.height));
  kv.set("camera.near_plane", fmt_double(v.camera.near_plane));
  kv.set("render.particle_radius", fmt_double(v.style.particle_radius_px));
  kv.set("render.draw_container", v.style.draw_container ? "true" : "false");
  kv.set("sdf.kappa", fmt_double(v.sdf.kappa));
  kv.set("sdf.alpha", fmt_double(v.sdf.alpha));
  kv.set("sdf.splat_radius", fmt_double(v.sdf.splat_radius));
  kv.set("sdf.v_ref", fmt_double(v.sdf.v_ref));
  kv.set("sdf.dim", fmt_double(v.sdf.dim));
  kv.set("sdf.normalization", v.sdf.normalization == Normalization::fixed_max ? "fixed_max" : "per_frame_max");
  kv.set("sdf.integrand", v.sdf.integrand == Integrand::speed ? "speed" : "projected");
  return kv;
}

VideoSpec video_from_kv(const KeyValues& kv) {
  VideoSpec v;
  for (const auto& [key, value] : kv.values()) {
    if (key == "video") {
      v.id = value;
    } else if (key == "camera.resolution") {
      v.camera.resolution = to_res(key, value);
    } else if (const auto it = video_keys().find(key); it != video_keys().end()) {
      it->second(v, key, value);
    } else {
      throw ConfigError("unknown key `" + key + "` in video description");
    }
  }
  v.scene.validate();
  v.camera.validate();
  v.sdf.validate();
  return v;
}

}  // namespace sdfforge
