#include "sdfforge/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sdfforge/bench.hpp"
#include "sdfforge/hash.hpp"
#include "sdfforge/sdf.hpp"
#include "sdfforge/sft.hpp"
#include "sdfforge/trace.hpp"

namespace sdfforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

std::string sidecar_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.f32", index);
  return buf;
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs body(i) for i in [0, n) in parallel; rethrows the lowest-index failure.
template <class F>
void parallel_for(long n, F&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

fs::path stamp_path(const fs::path& root, const std::string& stage) { return root / "stages" / (stage + ".json"); }

std::string stamp_digest(const fs::path& root, const std::string& stage) {
  const auto p = stamp_path(root, stage);
  if (!fs::exists(p)) throw ConfigError("stage " + stage + " has not run yet under " + root.string());
  return sha256_file(p);
}

struct StageSpec {
  std::string name;
  std::vector<std::string> dirs;      // top-level outputs under root
  std::vector<std::string> upstream;  // stages whose stamps feed the fingerprint
  std::string config_text;
};

std::string fingerprint(const fs::path& root, const StageSpec& spec) {
  std::string text = spec.config_text;
  for (const auto& up : spec.upstream) text += "\nupstream " + up + " " + stamp_digest(root, up);
  return sha256_hex(text);
}

bool is_current(const fs::path& root, const StageSpec& spec, const std::string& print) {
  const auto p = stamp_path(root, spec.name);
  if (!fs::exists(p)) return false;
  json stamp;
  try {
    stamp = json::parse(read_text(p));
  } catch (const json::exception&) {
    return false;
  }
  if (stamp.value("fingerprint", "") != print) return false;
  for (const auto& f : stamp.at("files")) {
    if (!fs::is_regular_file(root / f.get<std::string>())) return false;
  }
  return true;
}

void clear_outputs(const fs::path& root, const StageSpec& spec) {
  fs::remove(stamp_path(root, spec.name));
  for (const auto& d : spec.dirs) fs::remove_all(root / d);
}

void write_stamp(const fs::path& root, const StageSpec& spec, const std::string& print, std::uint64_t seed,
                 json extra) {
  json files = json::array();
  for (const auto& d : spec.dirs) {
    for (const auto& rel : list_tree(root / d)) files.push_back(d + "/" + rel);
  }
  json stamp{{"stage", spec.name}, {"seed", seed}, {"fingerprint", print}, {"files", files}};
  for (auto& [k, v] : extra.items()) stamp[k] = v;
  fs::create_directories(root / "stages");
  write_text(stamp_path(root, spec.name), stamp.dump(2) + "\n");
}

void refresh_checksums(const fs::path& root) {
  const auto text = tree_checksums(root, {"review"});
  const auto path = root / kChecksumFile;
  if (fs::exists(path) && read_text(path) == text) return;
  write_text(path, text);
}

std::string kv_subset(const KeyValues& kv, const std::vector<std::string>& prefixes) {
  std::string out;
  for (const auto& [k, v] : kv.values()) {
    for (const auto& p : prefixes) {
      if (k.starts_with(p)) {
        out += k + " = " + v + "\n";
        break;
      }
    }
  }
  return out;
}

StageSpec simulate_spec(const ForgeConfig& cfg, const std::vector<VideoSpec>& videos) {
  StageSpec s{"simulate", {"traces", "frames"}, {}, "seed " + std::to_string(cfg.seed) + "\n"};
  for (const auto& v : videos) s.config_text += kv_subset(video_to_kv(v), {"video", "scene.", "camera.", "render."});
  return s;
}

StageSpec render_spec(const ForgeConfig& cfg, const std::vector<VideoSpec>& videos) {
  StageSpec s{"render-sdf", {"sdf"}, {"simulate"}, std::string("sidecar ") + (cfg.sdf_sidecar ? "1" : "0") + "\n"};
  for (const auto& v : videos) s.config_text += kv_subset(video_to_kv(v), {"video", "sdf."});
  return s;
}

json bench_config_json(const BenchConfig& c) {
  return json{{"context_length", c.context_length},
              {"strides", c.strides},
              {"buffer", c.buffer},
              {"tau", c.tau},
              {"tcv_balance", c.tcv_balance == TcvBalance::exact ? "exact" : "bernoulli"},
              {"tcv_corrupt_prob", c.tcv_corrupt_prob},
              {"seed", c.seed}};
}

StageSpec bench_spec(const ForgeConfig& cfg) {
  json j = bench_config_json(cfg.bench);
  j["embeddings"] = cfg.embeddings.empty() ? json(nullptr) : json(sha256_file(cfg.embeddings));
  return {"build-bench", {"bench"}, {"simulate"}, j.dump()};
}

StageSpec sft_spec(const ForgeConfig& cfg) {
  const auto& s = cfg.sft;
  json j{{"dynamic_perception", s.dynamic_perception},
         {"sdf_cot", s.sdf_cot},
         {"nfs", s.nfs},
         {"tcv", s.tcv},
         {"options", s.options},
         {"mix_ratio", {s.mix_ratio.expert, s.mix_ratio.self}},
         {"mix_total", s.mix_total},
         {"tau", s.tau},
         {"buffer", s.buffer},
         {"seed", s.seed}};
  return {"emit-sft", {"dataset"}, {"render-sdf", "build-bench"}, j.dump()};
}

json skips_json(const std::vector<SkipRecord>& skips) {
  json out = json::array();
  for (const auto& s : skips) {
    out.push_back({{"task", s.task}, {"video", s.video}, {"stride", s.stride}, {"interval", s.interval},
                   {"reason", s.reason}});
  }
  return out;
}

}  // namespace

fs::path output_root(const RunOptions& opts) {
  if (opts.out) return *opts.out;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return kDefaultOut;
}

ForgeConfig resolve_config(const RunOptions& opts) {
  ForgeConfig cfg = opts.config ? load_config(*opts.config) : parse_config(KeyValues{});
  if (opts.seed) {
    set_seed(cfg, *opts.seed);
    plan_videos(cfg);
  }
  return cfg;
}

std::string StageReport::summary() const {
  char buf[160];
  if (skipped) {
    std::snprintf(buf, sizeof(buf), "%s: up to date, skipped", stage.c_str());
  } else {
    std::snprintf(buf, sizeof(buf), "%s: %d videos, %ld frames, %ld items, %.2f s", stage.c_str(), videos, frames,
                  items, seconds);
  }
  return buf;
}

StageReport cmd_simulate(const ForgeConfig& cfg, const fs::path& root, bool force) {
  const auto t0 = Clock::now();
  const auto videos = plan_videos(cfg);
  const auto spec = simulate_spec(cfg, videos);
  const auto print = fingerprint(root, spec);
  StageReport report{spec.name};
  report.videos = static_cast<int>(videos.size());
  if (!force && is_current(root, spec, print)) {
    report.skipped = true;
    return report;
  }
  clear_outputs(root, spec);
  fs::create_directories(root / "traces");
  fs::create_directories(root / "frames");

  std::vector<long> frame_counts(videos.size());
  parallel_for(static_cast<long>(videos.size()), [&](long k) {
    const auto& v = videos[k];
    const auto snaps = simulate(v.scene);
    write_trace(root / "traces" / (v.id + ".trace"), snaps, v.scene.dt);
    write_text(root / "traces" / (v.id + ".conf"), video_to_kv(v).dump());
    const fs::path dir = root / "frames" / v.id;
    fs::create_directories(dir);
    for (const auto& s : snaps) write_png(dir / frame_name(s.step + 1), emit_rgb(s, v.camera, v.scene, v.style));
    frame_counts[k] = static_cast<long>(snaps.size());
  });

  std::string index;
  for (std::size_t k = 0; k < videos.size(); ++k) {
    index += videos[k].id + " " + std::to_string(frame_counts[k]) + " " + fmt_double(1.0 / videos[k].scene.dt) + "\n";
    report.frames += frame_counts[k];
  }
  write_text(root / "frames" / "index.txt", index);
  write_stamp(root, spec, print, cfg.seed, {{"videos", videos.size()}, {"frames", report.frames}});
  refresh_checksums(root);
  report.seconds = since(t0);
  return report;
}

StageReport cmd_render_sdf(const ForgeConfig& cfg, const fs::path& root, bool force) {
  const auto t0 = Clock::now();
  const auto videos = plan_videos(cfg);
  const auto spec = render_spec(cfg, videos);
  const auto print = fingerprint(root, spec);
  StageReport report{spec.name};
  report.videos = static_cast<int>(videos.size());
  if (!force && is_current(root, spec, print)) {
    report.skipped = true;
    return report;
  }
  clear_outputs(root, spec);
  fs::create_directories(root / "sdf");

  std::vector<long> frame_counts(videos.size());
  parallel_for(static_cast<long>(videos.size()), [&](long k) {
    const auto& planned = videos[k];
    const auto recorded = video_from_kv(KeyValues::load(root / "traces" / (planned.id + ".conf")));
    const auto snaps = read_trace(root / "traces" / (planned.id + ".trace"));
    const fs::path dir = root / "sdf" / planned.id;
    fs::create_directories(dir);
    for (const auto& s : snaps) {
      const auto base = read_png(root / "frames" / planned.id / frame_name(s.step + 1));
      const auto img = render_sdf(s, recorded.camera, planned.sdf, &base);
      write_png(dir / frame_name(s.step + 1), img.rgb);
      if (cfg.sdf_sidecar) write_density_sidecar(dir / sidecar_name(s.step + 1), img);
    }
    frame_counts[k] = static_cast<long>(snaps.size());
  });

  std::string index;
  for (std::size_t k = 0; k < videos.size(); ++k) {
    index += videos[k].id + " " + std::to_string(frame_counts[k]) + " " + fmt_double(1.0 / videos[k].scene.dt) + "\n";
    report.frames += frame_counts[k];
  }
  write_text(root / "sdf" / "index.txt", index);
  write_stamp(root, spec, print, cfg.seed, {{"videos", videos.size()}, {"frames", report.frames}});
  refresh_checksums(root);
  report.seconds = since(t0);
  return report;
}

StageReport cmd_build_bench(const ForgeConfig& cfg, const fs::path& root, bool force) {
  const auto t0 = Clock::now();
  const auto spec = bench_spec(cfg);
  const auto print = fingerprint(root, spec);
  StageReport report{spec.name};
  if (!force && is_current(root, spec, print)) {
    report.skipped = true;
    return report;
  }
  clear_outputs(root, spec);
  const auto sequences = ingest_frames(root / "frames", FrameSource::simulated, root);
  const auto metric = cfg.embeddings.empty() ? SimilarityMetric::builtin() : SimilarityMetric::from_table(cfg.embeddings);
  const auto bench = build_benchmark(sequences, metric, cfg.bench);
  write_benchmark(root / "bench", bench, sequences);

  report.videos = static_cast<int>(sequences.size());
  for (const auto& s : sequences) report.frames += s.length();
  report.items = static_cast<long>(bench.nfs.size() + bench.tcv.size());
  write_stamp(root, spec, print, cfg.seed,
              {{"nfs", bench.nfs.size()}, {"tcv", bench.tcv.size()}, {"skips", bench.skips.size()}});
  refresh_checksums(root);
  report.seconds = since(t0);
  return report;
}

StageReport cmd_emit_sft(const ForgeConfig& cfg, const fs::path& root, bool force) {
  const auto t0 = Clock::now();
  const auto spec = sft_spec(cfg);
  const auto print = fingerprint(root, spec);
  StageReport report{spec.name};
  if (!force && is_current(root, spec, print)) {
    report.skipped = true;
    return report;
  }
  clear_outputs(root, spec);
  const SftLayout layout{root, root / "bench", root / "sdf", root / "dataset"};
  const auto result = emit_sft_dataset(layout, cfg.sft);
  report.items = static_cast<long>(result.items.size());
  std::map<std::string, long> per_task;
  for (const auto& it : result.items) ++per_task[std::string(to_string(it.task))];
  write_stamp(root, spec, print, cfg.seed, {{"items", per_task}, {"skips", skips_json(result.skips)}});
  refresh_checksums(root);
  report.seconds = since(t0);
  return report;
}

std::vector<StageReport> cmd_pipeline(const ForgeConfig& cfg, const fs::path& root, bool force) {
  using Stage = StageReport (*)(const ForgeConfig&, const fs::path&, bool);
  const std::pair<const char*, Stage> stages[] = {{"simulate", cmd_simulate},
                                                  {"render-sdf", cmd_render_sdf},
                                                  {"build-bench", cmd_build_bench},
                                                  {"emit-sft", cmd_emit_sft}};
  std::vector<StageReport> reports;
  for (const auto& [name, fn] : stages) {
    try {
      reports.push_back(fn(cfg, root, force));
    } catch (const std::exception& e) {
      throw StageFailed(name, std::current_exception(), e.what());
    }
  }
  return reports;
}

ScoreReport cmd_score(const fs::path& manifest, const fs::path& predictions, const fs::path& out_dir,
                      IntervalMode mode) {
  const auto m = load_scoring_manifest(manifest);
  const auto preds = load_predictions(predictions);
  auto report = score(m, preds, mode);
  fs::create_directories(out_dir);
  write_text(out_dir / "score.json", report_json(report).dump(2) + "\n");
  write_text(out_dir / "score.txt", report_text(report));
  return report;
}

std::vector<std::string> cmd_verify(const fs::path& root) {
  std::vector<std::string> problems;
  if (!fs::is_directory(root)) return {"no artifact tree at " + root.string()};

  std::map<std::string, int> listed;
  const auto stamps = list_tree(root / "stages");
  if (stamps.empty()) problems.push_back("no stage stamps under stages/");
  for (const auto& name : stamps) {
    json stamp;
    try {
      stamp = json::parse(read_text(root / "stages" / name));
    } catch (const json::exception& e) {
      problems.push_back("stages/" + name + ": unreadable stamp");
      continue;
    }
    for (const auto& f : stamp.at("files")) {
      const auto rel = f.get<std::string>();
      ++listed[rel];
      if (!fs::is_regular_file(root / rel)) problems.push_back(rel + ": listed in stages/" + name + " but missing");
    }
  }
  for (const auto& rel : list_tree(root)) {
    if (rel == kChecksumFile || rel.starts_with("stages/") || rel.starts_with("review/")) continue;
    const auto it = listed.find(rel);
    if (it == listed.end()) {
      problems.push_back(rel + ": not listed by any stage");
    } else if (it->second > 1) {
      problems.push_back(rel + ": listed by " + std::to_string(it->second) + " stages");
    }
  }

  for (const auto& c : verify_checksums(root, {"review"})) problems.push_back(c.path + ": checksum " + c.reason);

  for (const char* task : {"nfs", "tcv"}) {
    const auto path = root / "bench" / (std::string(task) + ".jsonl");
    if (!fs::exists(path)) continue;
    for (const auto& r : read_jsonl(path)) {
      for (const char* key : {"context", "options", "frames"}) {
        if (!r.contains(key)) continue;
        for (const auto& p : r.at(key)) {
          if (!fs::is_regular_file(root / p.get<std::string>())) {
            problems.push_back("bench/" + std::string(task) + ".jsonl " + r.at("id").get<std::string>() +
                               ": missing " + p.get<std::string>());
          }
        }
      }
    }
  }
  if (fs::exists(root / "dataset")) {
    for (const auto& p : check_sft_integrity(root / "dataset")) problems.push_back("dataset: unresolvable " + p);
  }
  return problems;
}

}  // namespace sdfforge
