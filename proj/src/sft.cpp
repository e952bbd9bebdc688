#include "sdfforge/sft.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>

#include "sdfforge/error.hpp"
#include "sdfforge/rng.hpp"

namespace sdfforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SftTask t) {
  switch (t) {
    case SftTask::dynamic_perception:
      return "dynamic_perception";
    case SftTask::sdf_cot:
      return "sdf_cot";
    case SftTask::nfs:
      return "nfs";
    case SftTask::tcv:
      return "tcv";
  }
  return "nfs";
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::expert:
      return "expert";
    case Provenance::self:
      return "self";
    case Provenance::unlabeled:
      return "unlabeled";
  }
  return "unlabeled";
}

std::optional<SftItem> build_dynamic_perception_item(std::span<const std::string> rgb_sequence,
                                                     const std::string& true_sdf,
                                                     std::span<const std::string> distractor_sdfs, int n,
                                                     std::uint64_t seed, const std::string& id, SkipLog& skips) {
  if (n < 2) throw ConfigError("dynamic perception needs at least 2 options");
  if (rgb_sequence.empty()) throw ConfigError("dynamic perception needs at least one RGB frame");
  if (distractor_sdfs.size() < static_cast<std::size_t>(n - 1)) {
    skips.add({"dynamic_perception", id, 0, 0, "insufficient_distractors"});
    return std::nullopt;
  }
  Rng rng(seed);
  auto options = rng.sample(std::vector<std::string>(distractor_sdfs.begin(), distractor_sdfs.end()),
                            static_cast<std::size_t>(n - 1));
  options.push_back(true_sdf);
  rng.shuffle(options);

  SftItem item;
  item.id = id;
  item.task = SftTask::dynamic_perception;
  for (const auto& p : rgb_sequence) item.frames.push_back({p, FrameKind::rgb});
  for (std::size_t i = 0; i < options.size(); ++i) {
    item.candidates.push_back({options[i], FrameKind::sdf});
    if (options[i] == true_sdf) item.answer = std::string(1, static_cast<char>('A' + i));
  }
  return item;
}

std::vector<FrameRef> build_sdf_cot_sequence(std::span<const std::string> frames, const std::string& sdf_of_last) {
  if (frames.empty()) throw ConfigError("SDF chain-of-thought sequence needs at least one frame");
  std::vector<FrameRef> out;
  for (const auto& f : frames) out.push_back({f, FrameKind::rgb});
  out.push_back({sdf_of_last, FrameKind::sdf});
  return out;
}

long expert_count(long total, MixRatio ratio) {
  const long parts = ratio.expert + ratio.self;
  if (total < 0 || ratio.expert < 0 || ratio.self < 0 || parts <= 0) throw ConfigError("invalid mix ratio or total");
  return (2 * total * ratio.expert + parts) / (2 * parts);
}

MixManifest mix_manifest(std::span<const std::string> expert_pool, std::span<const std::string> self_pool,
                         MixRatio ratio, long total, std::uint64_t seed) {
  MixManifest mix;
  mix.ratio = ratio;
  mix.total = total;
  mix.seed = seed;
  const long n_expert = expert_count(total, ratio);
  const long n_self = total - n_expert;
  if (static_cast<long>(expert_pool.size()) < n_expert) {
    throw PoolShortfall("expert pool has " + std::to_string(expert_pool.size()) + " ids, needs " +
                        std::to_string(n_expert));
  }
  Rng rng(seed);
  mix.expert_ids = rng.sample(std::vector<std::string>(expert_pool.begin(), expert_pool.end()),
                              static_cast<std::size_t>(n_expert));
  std::vector<std::string> taken = mix.expert_ids;
  std::sort(taken.begin(), taken.end());
  std::vector<std::string> rest;
  for (const auto& id : self_pool) {
    if (!std::binary_search(taken.begin(), taken.end(), id)) rest.push_back(id);
  }
  if (static_cast<long>(rest.size()) < n_self) {
    throw PoolShortfall("self pool has " + std::to_string(rest.size()) + " ids not already in the expert set, needs " +
                        std::to_string(n_self));
  }
  mix.self_ids = rng.sample(std::move(rest), static_cast<std::size_t>(n_self));
  return mix;
}

json mix_json(const MixManifest& mix) {
  return json{{"ratio", std::to_string(mix.ratio.expert) + ":" + std::to_string(mix.ratio.self)},
              {"rounding", "round_half_up"},
              {"total", mix.total},
              {"seed", mix.seed},
              {"expert_count", mix.expert_ids.size()},
              {"self_count", mix.self_ids.size()},
              {"expert_ids", mix.expert_ids},
              {"self_ids", mix.self_ids}};
}

namespace {

json frames_json(const std::vector<FrameRef>& frames) {
  json out = json::array();
  for (const auto& f : frames) out.push_back({{"path", f.path}, {"kind", f.kind == FrameKind::rgb ? "rgb" : "sdf"}});
  return out;
}

std::vector<FrameRef> frames_from_json(const json& j) {
  std::vector<FrameRef> out;
  for (const auto& f : j) {
    out.push_back({f.at("path").get<std::string>(), f.at("kind") == "sdf" ? FrameKind::sdf : FrameKind::rgb});
  }
  return out;
}

std::vector<std::string> strings(const json& j) { return j.get<std::vector<std::string>>(); }

std::vector<json> read_optional_jsonl(const fs::path& path) {
  if (!fs::exists(path)) throw IntegrityError(path.string(), "missing benchmark manifest");
  return read_jsonl(path);
}

// k records picked without replacement, returned in manifest order.
std::vector<const json*> pick(const std::vector<json>& records, int k, std::uint64_t seed, std::string_view tag,
                              SkipLog& skips) {
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t want = static_cast<std::size_t>(std::max(k, 0));
  if (want > idx.size()) {
    skips.add({std::string(tag), "", 0, 0,
               "requested " + std::to_string(want) + " items, source pool has " + std::to_string(idx.size())});
  }
  Rng rng(mix_seed(seed, hash_string(tag)));
  auto chosen = rng.sample(std::move(idx), std::min(want, records.size()));
  std::sort(chosen.begin(), chosen.end());
  std::vector<const json*> out;
  for (auto i : chosen) out.push_back(&records[i]);
  return out;
}

struct SdfFrame {
  std::string video;
  int index = 0;
  std::string path;
  const std::vector<double>* feature = nullptr;
};

// Destination names inside an item folder; sources are relative to the root.
struct Planned {
  SftItem item;                      // paths relative to the dataset dir
  std::vector<std::string> sources;  // frames then candidates, relative to the root
};

std::string file_name(std::string_view prefix, std::size_t i, FrameKind kind) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*s%02zu_%s.png", static_cast<int>(prefix.size()), prefix.data(), i,
                kind == FrameKind::rgb ? "rgb" : "sdf");
  return buf;
}

Planned relocate(SftItem item) {
  Planned p;
  const std::string dir = std::string(to_string(item.task)) + "/" + item.id + "/";
  for (std::size_t i = 0; i < item.frames.size(); ++i) {
    p.sources.push_back(item.frames[i].path);
    item.frames[i].path = dir + file_name("frame", i, item.frames[i].kind);
  }
  for (std::size_t i = 0; i < item.candidates.size(); ++i) {
    p.sources.push_back(item.candidates[i].path);
    item.candidates[i].path = dir + file_name("option", i, item.candidates[i].kind);
  }
  p.item = std::move(item);
  return p;
}

}  // namespace

json sft_record(const SftItem& item) {
  return json{{"id", item.id},
              {"task", std::string(to_string(item.task))},
              {"frames", frames_json(item.frames)},
              {"candidates", frames_json(item.candidates)},
              {"prompt_id", item.prompt_id.empty() ? json(nullptr) : json(item.prompt_id)},
              {"answer", item.answer},
              {"reasoning", item.reasoning ? json(*item.reasoning) : json(nullptr)},
              {"provenance", std::string(to_string(item.provenance))}};
}

SftResult emit_sft_dataset(const SftLayout& layout, const SftConfig& config) {
  if (config.options < 2) throw ConfigError("sft.options must be >= 2");
  const auto nfs = read_optional_jsonl(layout.bench_dir / "nfs.jsonl");
  const auto tcv = read_optional_jsonl(layout.bench_dir / "tcv.jsonl");
  const auto sdf_seqs = ingest_frames(layout.sdf_dir, FrameSource::simulated, layout.root);
  std::map<std::string, const FrameSequence*> sdf_by_video;
  for (const auto& s : sdf_seqs) {
    s.warm_features();
    sdf_by_video[s.video_id()] = &s;
  }
  auto sdf_path = [&](const std::string& video, int index) -> const std::string& {
    const auto it = sdf_by_video.find(video);
    if (it == sdf_by_video.end() || index < 1 || index > it->second->length()) {
      throw IntegrityError(video + ":" + std::to_string(index), "no SDF render for frame");
    }
    return it->second->frame(index).path;
  };

  SkipLog skips;
  std::vector<SftItem> items;

  // Dynamic perception: cross-video pool of SDF frames, pruned against the true SDF.
  std::vector<SdfFrame> pool;
  for (const auto& [video, seq] : sdf_by_video) {
    for (int i = 1; i <= seq->length(); ++i) pool.push_back({video, i, seq->frame(i).path, &seq->feature(i)});
  }
  for (const json* r : pick(nfs, config.dynamic_perception, config.seed, "dynamic_perception", skips)) {
    const auto video = r->at("video").get<std::string>();
    const auto ctx_idx = r->at("context_idx").get<std::vector<int>>();
    const int last = ctx_idx.back();
    const auto& truth = sdf_path(video, last);
    const auto& truth_feature = sdf_by_video.at(video)->feature(last);
    std::vector<std::string> distractors;
    for (const auto& f : pool) {
      if (f.video == video && std::abs(f.index - last) <= config.buffer) continue;
      if (cosine(*f.feature, truth_feature) < config.tau) distractors.push_back(f.path);
    }
    const auto id = "sft-dp" + r->at("id").get<std::string>().substr(3);
    const auto rgb = strings(r->at("context"));
    if (auto item = build_dynamic_perception_item(rgb, truth, distractors, config.options,
                                                  mix_seed(config.seed, hash_string(id)), id, skips)) {
      items.push_back(std::move(*item));
    }
  }

  // SDF chain of thought: the NFS question with the SDF of the last context frame appended.
  for (const json* r : pick(nfs, config.sdf_cot, config.seed, "sdf_cot", skips)) {
    SftItem item;
    item.id = "sft-cot" + r->at("id").get<std::string>().substr(3);
    item.task = SftTask::sdf_cot;
    const auto ctx = strings(r->at("context"));
    const auto ctx_idx = r->at("context_idx").get<std::vector<int>>();
    item.frames = build_sdf_cot_sequence(ctx, sdf_path(r->at("video").get<std::string>(), ctx_idx.back()));
    for (const auto& p : strings(r->at("options"))) item.candidates.push_back({p, FrameKind::rgb});
    item.prompt_id = "nfs_cot";
    item.answer = r->at("answer").get<std::string>();
    items.push_back(std::move(item));
  }

  for (const json* r : pick(nfs, config.nfs, config.seed, "nfs", skips)) {
    SftItem item;
    item.id = "sft-" + r->at("id").get<std::string>();
    item.task = SftTask::nfs;
    for (const auto& p : strings(r->at("context"))) item.frames.push_back({p, FrameKind::rgb});
    for (const auto& p : strings(r->at("options"))) item.candidates.push_back({p, FrameKind::rgb});
    item.prompt_id = "nfs_cot";
    item.answer = r->at("answer").get<std::string>();
    items.push_back(std::move(item));
  }

  for (const json* r : pick(tcv, config.tcv, config.seed, "tcv", skips)) {
    SftItem item;
    item.id = "sft-" + r->at("id").get<std::string>();
    item.task = SftTask::tcv;
    for (const auto& p : strings(r->at("frames"))) item.frames.push_back({p, FrameKind::rgb});
    item.prompt_id = "tcv_cot";
    item.answer = r->at("label") == "corrupted" ? "yes" : "no";
    items.push_back(std::move(item));
  }

  std::vector<Planned> planned;
  planned.reserve(items.size());
  for (auto& item : items) planned.push_back(relocate(std::move(item)));

  fs::create_directories(layout.out_dir);
  std::exception_ptr failure;
  const long n = static_cast<long>(planned.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const auto& p = planned[i];
      const fs::path dir = layout.out_dir / to_string(p.item.task) / p.item.id;
      fs::create_directories(dir);
      std::vector<FrameRef> dests = p.item.frames;
      dests.insert(dests.end(), p.item.candidates.begin(), p.item.candidates.end());
      for (std::size_t k = 0; k < dests.size(); ++k) {
        const fs::path src = layout.root / p.sources[k];
        if (!fs::is_regular_file(src)) throw IntegrityError(p.sources[k], "missing frame file");
        fs::copy_file(src, layout.out_dir / dests[k].path, fs::copy_options::overwrite_existing);
      }
      std::ofstream out(dir / "item.json", std::ios::binary);
      out << sft_record(p.item).dump(2) << '\n';
      if (!out) throw IoError("cannot write " + (dir / "item.json").string());
    } catch (...) {
#pragma omp critical(sft_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  SftResult result;
  std::vector<json> records;
  std::vector<std::string> ids;
  for (auto& p : planned) {
    records.push_back(sft_record(p.item));
    ids.push_back(p.item.id);
    result.items.push_back(std::move(p.item));
  }
  write_jsonl(layout.out_dir / "manifest.jsonl", records);

  const long total = config.mix_total < 0 ? static_cast<long>(ids.size()) : config.mix_total;
  result.mix = mix_manifest(ids, ids, config.mix_ratio, total, mix_seed(config.seed, hash_string("mix")));
  std::ofstream mix_out(layout.out_dir / "mix.json", std::ios::binary);
  mix_out << mix_json(result.mix).dump(2) << '\n';
  if (!mix_out) throw IoError("cannot write " + (layout.out_dir / "mix.json").string());
  result.skips = skips.records();
  return result;
}

std::vector<std::string> check_sft_integrity(const fs::path& dataset_dir) {
  std::vector<std::string> bad;
  const auto manifest = dataset_dir / "manifest.jsonl";
  if (!fs::exists(manifest)) return {manifest.string()};
  for (const auto& r : read_jsonl(manifest)) {
    auto refs = frames_from_json(r.at("frames"));
    const auto cands = frames_from_json(r.at("candidates"));
    refs.insert(refs.end(), cands.begin(), cands.end());
    for (const auto& f : refs) {
      const fs::path p(f.path);
      const bool escapes = p.is_absolute() || std::any_of(p.begin(), p.end(), [](const fs::path& c) { return c == ".."; });
      if (escapes || !fs::is_regular_file(dataset_dir / p)) bad.push_back(f.path);
    }
  }
  return bad;
}

}  // namespace sdfforge
