#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace sdfforge {

enum class Verdict { accept, reject, flag_ethics };

std::optional<Verdict> parse_verdict(std::string_view s);
std::string_view to_string(Verdict v);

struct ReviewDecision {
  std::string item_id;
  Verdict verdict = Verdict::accept;
  std::string note;
  std::string annotator;
  std::string timestamp;  // UTC, ISO 8601
};

// Throws ConfigError: empty item or annotator, flag_ethics without a note.
void validate(const ReviewDecision& d);

nlohmann::json decision_json(const ReviewDecision& d);
ReviewDecision decision_from_json(const nlohmann::json& j);

// Append-only record-per-line log. Appends are serialized, so file order is
// the total order of decisions.
class DecisionLog {
 public:
  explicit DecisionLog(std::filesystem::path path);

  void append(const ReviewDecision& d);
  std::vector<ReviewDecision> read() const;  // throws MalformedLog
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
};

using DecisionKey = std::pair<std::string, std::string>;  // (item, annotator)

// Later entries replace earlier ones for the same (item, annotator).
std::map<DecisionKey, ReviewDecision> latest_decisions(std::span<const ReviewDecision> log);

struct ReviewItem {
  std::string id;
  std::string task;    // nfs, tcv, dynamic_perception, sdf_cot
  std::string source;  // bench or dataset
  std::optional<int> stride;
  std::vector<std::string> frames;   // relative to the artifact root
  std::vector<std::string> options;  // NFS and dynamic perception candidates
  nlohmann::json record;             // manifest line as written
};

// bench/nfs.jsonl, bench/tcv.jsonl and dataset/manifest.jsonl, whichever exist.
std::vector<ReviewItem> load_review_items(const std::filesystem::path& root);

// An item is dropped when any annotator's latest verdict is reject or flag_ethics.
std::vector<std::string> excluded_items(std::span<const ReviewDecision> log);

// Manifest records that survive review, in manifest order.
nlohmann::json export_manifest(std::span<const ReviewItem> items, std::span<const ReviewDecision> log,
                               const std::optional<std::string>& task = std::nullopt);

// Checklist shown next to each item in the review UI.
std::vector<std::string> review_checklist(const std::string& task);

}  // namespace sdfforge
