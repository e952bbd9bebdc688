#include "sdfforge/review.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "sdfforge/bench.hpp"
#include "sdfforge/error.hpp"

namespace sdfforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<Verdict> parse_verdict(std::string_view s) {
  if (s == "accept") return Verdict::accept;
  if (s == "reject") return Verdict::reject;
  if (s == "flag_ethics") return Verdict::flag_ethics;
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::accept:
      return "accept";
    case Verdict::reject:
      return "reject";
    case Verdict::flag_ethics:
      return "flag_ethics";
  }
  return "accept";
}

void validate(const ReviewDecision& d) {
  if (d.item_id.empty()) throw ConfigError("decision has no item id");
  if (d.annotator.empty()) throw ConfigError("decision has no annotator");
  if (d.verdict == Verdict::flag_ethics &&
      d.note.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ConfigError("flag_ethics needs a note");
  }
}

json decision_json(const ReviewDecision& d) {
  return json{{"item", d.item_id},
              {"verdict", std::string(to_string(d.verdict))},
              {"note", d.note},
              {"annotator", d.annotator},
              {"timestamp", d.timestamp}};
}

ReviewDecision decision_from_json(const json& j) {
  ReviewDecision d;
  d.item_id = j.at("item").get<std::string>();
  const auto v = parse_verdict(j.at("verdict").get<std::string>());
  if (!v) throw ConfigError("unknown verdict " + j.at("verdict").dump());
  d.verdict = *v;
  d.note = j.value("note", "");
  d.annotator = j.at("annotator").get<std::string>();
  d.timestamp = j.value("timestamp", "");
  return d;
}

DecisionLog::DecisionLog(fs::path path) : path_(std::move(path)) {}

void DecisionLog::append(const ReviewDecision& d) {
  validate(d);
  const std::string line = decision_json(d).dump() + "\n";
  std::lock_guard lock(mu_);
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << line;
  out.flush();
  if (!out) throw IoError("cannot append to " + path_.string());
}

std::vector<ReviewDecision> DecisionLog::read() const {
  std::lock_guard lock(mu_);
  std::vector<ReviewDecision> out;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decision_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw MalformedLog(lineno, e.what());
    }
  }
  return out;
}

std::map<DecisionKey, ReviewDecision> latest_decisions(std::span<const ReviewDecision> log) {
  std::map<DecisionKey, ReviewDecision> out;
  for (const auto& d : log) out[{d.item_id, d.annotator}] = d;
  return out;
}

namespace {

std::vector<std::string> string_list(const json& j, const std::string& prefix = {}) {
  std::vector<std::string> out;
  for (const auto& s : j) out.push_back(prefix + s.get<std::string>());
  return out;
}

}  // namespace

std::vector<ReviewItem> load_review_items(const fs::path& root) {
  std::vector<ReviewItem> items;
  for (const char* task : {"nfs", "tcv"}) {
    const auto path = root / "bench" / (std::string(task) + ".jsonl");
    if (!fs::exists(path)) continue;
    for (auto& r : read_jsonl(path)) {
      ReviewItem it;
      it.id = r.at("id").get<std::string>();
      it.task = task;
      it.source = "bench";
      it.stride = r.at("stride").get<int>();
      if (it.task == "nfs") {
        it.frames = string_list(r.at("context"));
        it.options = string_list(r.at("options"));
      } else {
        it.frames = string_list(r.at("frames"));
      }
      it.record = std::move(r);
      items.push_back(std::move(it));
    }
  }
  const auto sft = root / "dataset" / "manifest.jsonl";
  if (fs::exists(sft)) {
    for (auto& r : read_jsonl(sft)) {
      ReviewItem it;
      it.id = r.at("id").get<std::string>();
      it.task = r.at("task").get<std::string>();
      it.source = "dataset";
      for (const auto& f : r.at("frames")) it.frames.push_back("dataset/" + f.at("path").get<std::string>());
      for (const auto& f : r.at("candidates")) it.options.push_back("dataset/" + f.at("path").get<std::string>());
      it.record = std::move(r);
      items.push_back(std::move(it));
    }
  }
  return items;
}

std::vector<std::string> excluded_items(std::span<const ReviewDecision> log) {
  std::set<std::string> out;
  for (const auto& [key, d] : latest_decisions(log)) {
    if (d.verdict != Verdict::accept) out.insert(key.first);
  }
  return {out.begin(), out.end()};
}

json export_manifest(std::span<const ReviewItem> items, std::span<const ReviewDecision> log,
                     const std::optional<std::string>& task) {
  const auto excluded = excluded_items(log);
  json records = json::array();
  json dropped = json::array();
  for (const auto& it : items) {
    if (task && it.task != *task) continue;
    if (std::binary_search(excluded.begin(), excluded.end(), it.id)) {
      dropped.push_back(it.id);
      continue;
    }
    json r = it.record;
    r["task"] = it.task;
    r["source"] = it.source;
    records.push_back(std::move(r));
  }
  return json{{"items", records}, {"excluded", dropped}, {"count", records.size()}};
}

std::vector<std::string> review_checklist(const std::string& task) {
  std::vector<std::string> out = {
      "Camera viewpoint stays fixed across the frames",
      "Motion pacing looks uniform from frame to frame",
      "Nothing privacy-sensitive or otherwise unsuitable is visible",
  };
  if (task == "nfs" || task == "dynamic_perception" || task == "sdf_cot") {
    out.push_back("Exactly one option is a plausible continuation");
  } else if (task == "tcv") {
    out.push_back("The label matches what the frames show");
  }
  return out;
}

}  // namespace sdfforge
