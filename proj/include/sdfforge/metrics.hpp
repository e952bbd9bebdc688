#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sdfforge {

enum class Task { nfs, tcv };

// TCV answer convention: "yes" means a corrupted/incoherent frame is present.
inline constexpr const char* kTcvConvention =
    "TCV: \"yes\" = a corrupted/incoherent frame is present, \"no\" = coherent sequence";

struct ScoredItem {
  std::string id;
  int stride = 0;
  int answer_index = 0;  // NFS: option position; TCV: 0 = yes (corrupted), 1 = no
  int num_options = 4;
};

struct ScoringManifest {
  Task task = Task::nfs;
  std::vector<ScoredItem> items;
};

// Task is inferred from the records (`options` => NFS, `label` => TCV).
ScoringManifest scoring_manifest(const std::vector<nlohmann::json>& records);
ScoringManifest load_scoring_manifest(const std::filesystem::path& path);

struct Prediction {
  std::string id;
  std::string run = "0";
  std::optional<std::string> answer;
  std::optional<std::vector<double>> scores;
  int line = 0;
};

// Record-per-line JSON; blank lines ignored. Throws MalformedLog.
std::vector<Prediction> parse_predictions(std::istream& in);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

enum class IntervalMode { normal95, none };

struct Aggregate {
  double mean = 0.0;
  double half_width = 0.0;
};

// half_width = 1.96 * sample_sd / sqrt(n) for n > 1, else 0.
Aggregate aggregate_runs(std::span<const double> per_run, IntervalMode mode = IntervalMode::normal95);

struct Tally {
  long correct = 0;
  long total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct RunScore {
  std::string run;
  Tally tally;
  long missing = 0;
  long parse_failures = 0;
};

struct ScoreReport {
  Task task = Task::nfs;
  long items = 0;
  Tally overall;  // over every (item, run)
  std::map<int, Tally> per_stride;
  std::vector<RunScore> runs;
  Aggregate aggregate;
  IntervalMode interval_mode = IntervalMode::normal95;
  long missing = 0;
  long parse_failures = 0;
  std::vector<std::string> unknown_ids;
  std::vector<std::string> parse_failure_ids;  // "<run>/<id>"
};

// Throws AmbiguousLog on a duplicate (item, run).
ScoreReport score_nfs(const ScoringManifest& manifest, std::span<const Prediction> predictions,
                      IntervalMode mode = IntervalMode::normal95);
ScoreReport score_tcv(const ScoringManifest& manifest, std::span<const Prediction> predictions,
                      IntervalMode mode = IntervalMode::normal95);
ScoreReport score(const ScoringManifest& manifest, std::span<const Prediction> predictions,
                  IntervalMode mode = IntervalMode::normal95);

nlohmann::json report_json(const ScoreReport& report);
std::string report_text(const ScoreReport& report);

}  // namespace sdfforge
