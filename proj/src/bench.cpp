#include "sdfforge/bench.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "sdfforge/error.hpp"
#include "sdfforge/kernels.hpp"
#include "sdfforge/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sdfforge {

FrameSequence::FrameSequence(std::string video_id, FrameSource source, std::vector<Frame> frames, fs::path root)
    : video_id_(std::move(video_id)),
      source_(source),
      frames_(std::move(frames)),
      root_(std::move(root)),
      images_(frames_.size()),
      features_(frames_.size()) {}

FrameSequence FrameSequence::from_images(std::string video_id, std::vector<Image> images, double fps) {
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int index = static_cast<int>(i) + 1;
    frames.push_back({index, i / fps, video_id + "/" + std::to_string(index) + ".png"});
  }
  FrameSequence seq(std::move(video_id), FrameSource::ingested, std::move(frames));
  for (std::size_t i = 0; i < images.size(); ++i) {
    seq.images_[i] = std::make_shared<const Image>(std::move(images[i]));
  }
  return seq;
}

void FrameSequence::validate() const {
  if (length() < 2) throw ConfigError("sequence " + video_id_ + " has fewer than 2 frames");
  for (int i = 1; i < length(); ++i) {
    if (!(frames_[i].timestamp > frames_[i - 1].timestamp)) {
      throw ConfigError("sequence " + video_id_ + " timestamps are not strictly increasing");
    }
  }
  const Resolution res = image(1).resolution();
  for (int i = 2; i <= length(); ++i) {
    if (image(i).resolution() != res) throw ConfigError("sequence " + video_id_ + " has mixed resolutions");
  }
}

const Image& FrameSequence::image(int index) const {
  auto& slot = images_.at(index - 1);
  if (!slot) slot = std::make_shared<const Image>(read_png(root_ / frames_[index - 1].path));
  return *slot;
}

const std::vector<double>& FrameSequence::feature(int index) const {
  auto& f = features_.at(index - 1);
  if (f.empty()) f = kernels::luminance_feature(image(index));
  return f;
}

void FrameSequence::warm_features() const {
  std::vector<const Image*> todo;
  std::vector<int> slots;
  for (int i = 1; i <= length(); ++i) {
    if (features_[i - 1].empty()) {
      todo.push_back(&image(i));
      slots.push_back(i - 1);
    }
  }
  std::vector<std::vector<double>> out(todo.size());
  kernels::luminance_features_omp(todo, out);
  for (std::size_t k = 0; k < slots.size(); ++k) features_[slots[k]] = std::move(out[k]);
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string manifest_path(const fs::path& file, const fs::path& base) {
  if (!base.empty()) {
    const fs::path rel = fs::relative(file, base);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  }
  return fs::absolute(file).generic_string();
}

}  // namespace

std::vector<FrameSequence> ingest_frames(const fs::path& dir, FrameSource source, const fs::path& path_base) {
  std::ifstream index(dir / "index.txt");
  if (!index) throw ConfigError("frame directory has no index.txt: " + dir.string());
  std::vector<FrameSequence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(index, line)) {
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    if (tok.size() != 3) throw ConfigError("index.txt line " + std::to_string(lineno) + ": expected `video_id frame_count fps`");
    const std::string& video = tok[0];
    int count = 0;
    double fps = 0.0;
    try {
      count = std::stoi(tok[1]);
      fps = std::stod(tok[2]);
    } catch (const std::exception&) {
      throw ConfigError("index.txt line " + std::to_string(lineno) + ": bad number");
    }
    if (!(fps > 0.0)) throw ConfigError("index.txt line " + std::to_string(lineno) + ": fps must be > 0");
    std::vector<std::pair<long, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(dir / video)) {
      if (entry.path().extension() != ".png") continue;
      const std::string stem = entry.path().stem().string();
      if (!all_digits(stem)) throw ConfigError("frame file name is not numeric: " + entry.path().string());
      files.emplace_back(std::stol(stem), entry.path());
    }
    std::sort(files.begin(), files.end());
    if (static_cast<int>(files.size()) != count) {
      throw ConfigError("video " + video + ": index says " + std::to_string(count) + " frames, found " +
                        std::to_string(files.size()));
    }
    std::vector<Frame> frames;
    for (int i = 0; i < count; ++i) {
      frames.push_back({i + 1, i / fps, manifest_path(files[i].second, path_base)});
    }
    out.emplace_back(video, source, std::move(frames), path_base);
  }
  return out;
}

std::vector<Interval> partition_intervals(int T, int L, int stride) {
  if (L < 1 || stride < 1) throw ConfigError("context length and stride must be >= 1");
  if (T < L + 1) {
    throw SequenceTooShort("sequence of " + std::to_string(T) + " frames leaves no ground truth after " +
                           std::to_string(L) + " context frames");
  }
  std::vector<Interval> out;
  for (int start = 1; start + L - 1 + 1 <= T; start += stride) out.push_back({start, start + L - 1});
  return out;
}

std::vector<int> distractor_candidates(const Interval& interval, int T, int buffer) {
  const int lo = std::max(1, interval.start - buffer);
  const int hi = std::min(interval.end + buffer, T);
  std::vector<int> out;
  for (int t = 1; t <= T; ++t) {
    if (t < lo || t > hi) out.push_back(t);
  }
  return out;
}

std::vector<ScoredFrame> prune_by_similarity(std::span<const int> candidates, int ground_truth,
                                             const SimilarityFn& sim, double tau) {
  std::vector<ScoredFrame> out;
  for (int t : candidates) {
    const double s = sim(t, ground_truth);
    if (s < tau) out.push_back({t, s});
  }
  return out;
}

std::vector<ScoredFrame> prune_by_similarity(std::span<const int> candidates, int ground_truth,
                                             const FrameSequence& seq, const SimilarityMetric& metric,
                                             double tau) {
  return prune_by_similarity(
      candidates, ground_truth, [&](int a, int b) { return metric(seq, a, b); }, tau);
}

void SkipLog::add(SkipRecord r) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(r));
}

std::vector<SkipRecord> SkipLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::uint64_t item_seed(std::uint64_t global, const std::string& video, int stride, int interval_number,
                        std::string_view task) {
  std::uint64_t s = mix_seed(global, hash_string(video));
  s = mix_seed(s, static_cast<std::uint64_t>(stride));
  s = mix_seed(s, static_cast<std::uint64_t>(static_cast<std::int64_t>(interval_number)));
  s = mix_seed(s, hash_string(task));
  return s & ((1ULL << 53) - 1);  // exact in JSON doubles
}

namespace {

std::string item_name(std::string_view task, const ItemContext& ctx) {
  char num[16];
  std::snprintf(num, sizeof(num), "%03d", ctx.interval_number);
  return std::string(task) + "-" + ctx.video + "-s" + std::to_string(ctx.stride) + "-" + num;
}

std::vector<int> interval_frames(const Interval& iv) {
  std::vector<int> out;
  for (int t = iv.start; t <= iv.end; ++t) out.push_back(t);
  return out;
}

}  // namespace

std::optional<NfsItem> build_nfs_item(const Interval& interval, const FrameSequence& seq,
                                      std::span<const ScoredFrame> pruned, std::uint64_t seed,
                                      const ItemContext& ctx, SkipLog& skips) {
  (void)seq;
  if (pruned.size() < 3) {
    skips.add({"nfs", ctx.video, ctx.stride, ctx.interval_number,
               "insufficient_distractors: |D'|=" + std::to_string(pruned.size())});
    return std::nullopt;
  }
  Rng rng(seed);
  const auto picks = rng.sample(std::vector<ScoredFrame>(pruned.begin(), pruned.end()), 3);
  std::vector<int> order{0, 1, 2, 3};  // 0 = ground truth, 1..3 = picks
  rng.shuffle(order);

  NfsItem item;
  item.id = item_name("nfs", ctx);
  item.video = ctx.video;
  item.stride = ctx.stride;
  item.interval_number = ctx.interval_number;
  item.interval = interval;
  item.context = interval_frames(interval);
  item.seed = seed;
  for (int pos = 0; pos < 4; ++pos) {
    if (order[pos] == 0) {
      item.options.push_back(interval.ground_truth());
      item.answer = static_cast<char>('A' + pos);
    } else {
      item.options.push_back(picks[order[pos] - 1].index);
      item.distractor_sims.push_back(picks[order[pos] - 1].similarity);
    }
  }
  return item;
}

std::optional<TcvItem> build_tcv_item(const Interval& window, const FrameSequence& seq,
                                      std::span<const ScoredFrame> pruned, std::uint64_t seed, bool corrupt,
                                      const ItemContext& ctx, SkipLog& skips) {
  (void)seq;
  if (corrupt && pruned.empty()) {
    skips.add({"tcv", ctx.video, ctx.stride, ctx.interval_number, "no_distractor_for_corruption"});
    return std::nullopt;
  }
  TcvItem item;
  item.id = item_name("tcv", ctx);
  item.video = ctx.video;
  item.stride = ctx.stride;
  item.interval_number = ctx.interval_number;
  item.interval = window;
  item.window = interval_frames(window);
  item.presented = item.window;
  item.seed = seed;
  item.corrupted = corrupt;
  if (corrupt) {
    Rng rng(seed);
    const int pos = static_cast<int>(rng.below(item.window.size()));
    const ScoredFrame& src = pruned[rng.below(pruned.size())];
    item.presented[pos] = src.index;
    item.corrupt_pos = pos;
    item.source = src.index;
    item.source_sim = src.similarity;
  }
  return item;
}

namespace {

struct SequenceResult {
  std::vector<NfsItem> nfs;
  std::vector<TcvItem> tcv;
};

SequenceResult build_for_sequence(const FrameSequence& seq, const SimilarityMetric& metric,
                                  const BenchConfig& cfg, SkipLog& skips) {
  SequenceResult out;
  const int T = seq.length();
  if (T < cfg.context_length + 1) {
    skips.add({"all", seq.video_id(), 0, -1, "sequence_too_short: T=" + std::to_string(T)});
    return out;
  }
  if (metric.kind() == SimilarityMetric::Kind::builtin_luminance_cosine) seq.warm_features();

  for (int stride : cfg.strides) {
    const auto intervals = partition_intervals(T, cfg.context_length, stride);
    std::vector<std::vector<ScoredFrame>> pruned;
    for (const auto& iv : intervals) {
      const auto cand = distractor_candidates(iv, T, cfg.buffer);
      pruned.push_back(prune_by_similarity(cand, iv.ground_truth(), seq, metric, cfg.tau));
    }

    for (std::size_t i = 0; i < intervals.size(); ++i) {
      const ItemContext ctx{seq.video_id(), stride, static_cast<int>(i)};
      const auto seed = item_seed(cfg.seed, seq.video_id(), stride, ctx.interval_number, "nfs");
      if (auto item = build_nfs_item(intervals[i], seq, pruned[i], seed, ctx, skips)) {
        out.nfs.push_back(std::move(*item));
      }
    }

    std::vector<int> label(intervals.size(), -1);  // 1 corrupted, 0 coherent, -1 unused
    if (cfg.tcv_balance == TcvBalance::exact) {
      std::vector<int> eligible, all;
      for (std::size_t i = 0; i < intervals.size(); ++i) {
        all.push_back(static_cast<int>(i));
        if (!pruned[i].empty()) eligible.push_back(static_cast<int>(i));
      }
      const std::size_t n = std::min(eligible.size(), intervals.size() / 2);
      Rng rng(item_seed(cfg.seed, seq.video_id(), stride, -1, "tcv-balance"));
      for (int i : rng.sample(eligible, n)) label[i] = 1;
      std::vector<int> rest;
      for (int i : all) {
        if (label[i] != 1) rest.push_back(i);
      }
      for (int i : rng.sample(rest, n)) label[i] = 0;
    } else {
      for (std::size_t i = 0; i < intervals.size(); ++i) {
        Rng coin(item_seed(cfg.seed, seq.video_id(), stride, static_cast<int>(i), "tcv-coin"));
        label[i] = coin.bernoulli(cfg.tcv_corrupt_prob) ? 1 : 0;
      }
    }

    for (std::size_t i = 0; i < intervals.size(); ++i) {
      const ItemContext ctx{seq.video_id(), stride, static_cast<int>(i)};
      if (label[i] < 0) {
        skips.add({"tcv", seq.video_id(), stride, ctx.interval_number, "class_balance"});
        continue;
      }
      const auto seed = item_seed(cfg.seed, seq.video_id(), stride, ctx.interval_number, "tcv");
      if (auto item = build_tcv_item(intervals[i], seq, pruned[i], seed, label[i] == 1, ctx, skips)) {
        out.tcv.push_back(std::move(*item));
      }
    }
  }
  return out;
}

bool skip_less(const SkipRecord& a, const SkipRecord& b) {
  return std::tie(a.video, a.stride, a.task, a.interval, a.reason) <
         std::tie(b.video, b.stride, b.task, b.interval, b.reason);
}

}  // namespace

Benchmark build_benchmark(std::span<const FrameSequence> sequences, const SimilarityMetric& metric,
                          const BenchConfig& config) {
  if (sequences.empty()) throw EmptyBenchmark("no input sequences");
  if (config.context_length < 1) throw ConfigError("context length must be >= 1");
  if (config.strides.empty()) throw ConfigError("at least one stride is required");
  for (int s : config.strides) {
    if (s < 1) throw ConfigError("strides must be >= 1");
  }
  if (config.buffer < 0) throw ConfigError("buffer must be >= 0");
  {
    std::set<std::string> ids;
    for (const auto& s : sequences) {
      if (!ids.insert(s.video_id()).second) throw ConfigError("duplicate video id " + s.video_id());
    }
  }

  std::vector<SequenceResult> per_seq(sequences.size());
  SkipLog skips;
  const auto n = static_cast<std::ptrdiff_t>(sequences.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      per_seq[i] = build_for_sequence(sequences[i], metric, config, skips);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  Benchmark bench;
  bench.config = config;
  for (auto& r : per_seq) {
    std::move(r.nfs.begin(), r.nfs.end(), std::back_inserter(bench.nfs));
    std::move(r.tcv.begin(), r.tcv.end(), std::back_inserter(bench.tcv));
  }
  bench.skips = skips.records();
  std::sort(bench.skips.begin(), bench.skips.end(), skip_less);
  if (bench.nfs.empty() && bench.tcv.empty()) {
    throw EmptyBenchmark("benchmark produced no items (" + std::to_string(bench.skips.size()) + " skips)");
  }
  return bench;
}

namespace {

json paths(const FrameSequence& seq, const std::vector<int>& idx) {
  json out = json::array();
  for (int i : idx) out.push_back(seq.frame(i).path);
  return out;
}

}  // namespace

json nfs_record(const NfsItem& item, const FrameSequence& seq) {
  return json{{"id", item.id},
              {"video", item.video},
              {"stride", item.stride},
              {"interval", {item.interval.start, item.interval.end}},
              {"context", paths(seq, item.context)},
              {"context_idx", item.context},
              {"options", paths(seq, item.options)},
              {"options_idx", item.options},
              {"answer", std::string(1, item.answer)},
              {"distractor_sims", item.distractor_sims},
              {"seed", item.seed}};
}

json tcv_record(const TcvItem& item, const FrameSequence& seq) {
  json r{{"id", item.id},
         {"video", item.video},
         {"stride", item.stride},
         {"interval", {item.interval.start, item.interval.end}},
         {"frames", paths(seq, item.presented)},
         {"frames_idx", item.presented},
         {"label", item.corrupted ? "corrupted" : "coherent"},
         {"seed", item.seed}};
  if (item.corrupted) {
    r["corrupt_pos"] = *item.corrupt_pos;
    r["source"] = *item.source;
    r["source_sim"] = *item.source_sim;
  }
  return r;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_benchmark(const fs::path& dir, const Benchmark& bench, std::span<const FrameSequence> sequences) {
  fs::create_directories(dir);
  std::map<std::string, const FrameSequence*> by_id;
  for (const auto& s : sequences) by_id[s.video_id()] = &s;

  std::vector<json> nfs, tcv;
  for (const auto& item : bench.nfs) nfs.push_back(nfs_record(item, *by_id.at(item.video)));
  std::size_t corrupted = 0;
  for (const auto& item : bench.tcv) {
    tcv.push_back(tcv_record(item, *by_id.at(item.video)));
    corrupted += item.corrupted;
  }
  write_jsonl(dir / "nfs.jsonl", nfs);
  write_jsonl(dir / "tcv.jsonl", tcv);

  const auto& c = bench.config;
  json skips = json::array();
  for (const auto& s : bench.skips) {
    skips.push_back({{"task", s.task}, {"video", s.video}, {"stride", s.stride}, {"interval", s.interval},
                     {"reason", s.reason}});
  }
  json videos = json::array();
  for (const auto& s : sequences) {
    videos.push_back({{"id", s.video_id()},
                      {"frames", s.length()},
                      {"source", s.source() == FrameSource::simulated ? "simulated" : "ingested"}});
  }
  json manifest{{"seed", c.seed},
                {"config",
                 {{"context_length", c.context_length},
                  {"strides", c.strides},
                  {"buffer", c.buffer},
                  {"tau", c.tau},
                  {"tcv_balance", c.tcv_balance == TcvBalance::exact ? "exact" : "bernoulli"},
                  {"tcv_corrupt_prob", c.tcv_corrupt_prob}}},
                {"counts",
                 {{"nfs", bench.nfs.size()},
                  {"tcv", bench.tcv.size()},
                  {"tcv_corrupted", corrupted},
                  {"tcv_coherent", bench.tcv.size() - corrupted},
                  {"skips", bench.skips.size()}}},
                {"files", {"nfs.jsonl", "tcv.jsonl"}},
                {"videos", videos},
                {"skips", skips}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
}

}  // namespace sdfforge
