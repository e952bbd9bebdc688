#include "sdfforge/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sdfforge/bench.hpp"
#include "sdfforge/error.hpp"

using nlohmann::json;

namespace sdfforge {

ScoringManifest scoring_manifest(const std::vector<json>& records) {
  ScoringManifest m;
  bool seen_nfs = false, seen_tcv = false;
  for (const auto& r : records) {
    ScoredItem item;
    item.id = r.at("id").get<std::string>();
    item.stride = r.value("stride", 0);
    if (r.contains("options")) {
      seen_nfs = true;
      item.num_options = static_cast<int>(r.at("options").size());
      const auto answer = r.at("answer").get<std::string>();
      if (answer.size() != 1 || answer[0] < 'A' || answer[0] >= 'A' + item.num_options) {
        throw ConfigError("manifest item " + item.id + " has invalid answer key " + answer);
      }
      item.answer_index = answer[0] - 'A';
    } else if (r.contains("label")) {
      seen_tcv = true;
      item.num_options = 2;
      const auto label = r.at("label").get<std::string>();
      if (label != "corrupted" && label != "coherent") {
        throw ConfigError("manifest item " + item.id + " has invalid label " + label);
      }
      item.answer_index = label == "corrupted" ? 0 : 1;
    } else {
      throw ConfigError("manifest record " + item.id + " is neither NFS nor TCV");
    }
    m.items.push_back(std::move(item));
  }
  if (seen_nfs && seen_tcv) throw ConfigError("manifest mixes NFS and TCV records");
  m.task = seen_tcv ? Task::tcv : Task::nfs;
  return m;
}

ScoringManifest load_scoring_manifest(const std::filesystem::path& path) {
  return scoring_manifest(read_jsonl(path));
}

std::vector<Prediction> parse_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw MalformedLog(lineno, "not valid JSON");
    }
    if (!j.is_object()) throw MalformedLog(lineno, "record is not an object");
    Prediction p;
    p.line = lineno;
    if (!j.contains("id") || !j["id"].is_string()) throw MalformedLog(lineno, "missing string field `id`");
    p.id = j["id"].get<std::string>();
    if (j.contains("run")) {
      const auto& run = j["run"];
      if (run.is_string()) {
        p.run = run.get<std::string>();
      } else if (run.is_number_integer()) {
        p.run = std::to_string(run.get<long long>());
      } else {
        throw MalformedLog(lineno, "`run` must be a string or integer");
      }
    }
    if (j.contains("scores")) {
      if (!j["scores"].is_array()) throw MalformedLog(lineno, "`scores` must be an array");
      std::vector<double> s;
      for (const auto& x : j["scores"]) {
        if (!x.is_number()) throw MalformedLog(lineno, "`scores` must hold numbers");
        s.push_back(x.get<double>());
      }
      p.scores = std::move(s);
    } else if (j.contains("answer")) {
      if (!j["answer"].is_string()) throw MalformedLog(lineno, "`answer` must be a string");
      p.answer = j["answer"].get<std::string>();
    } else {
      throw MalformedLog(lineno, "record needs `answer` or `scores`");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read prediction log " + path.string());
  return parse_predictions(in);
}

Aggregate aggregate_runs(std::span<const double> per_run, IntervalMode mode) {
  Aggregate a;
  if (per_run.empty()) return a;
  const double n = static_cast<double>(per_run.size());
  for (double x : per_run) a.mean += x;
  a.mean /= n;
  if (per_run.size() > 1 && mode == IntervalMode::normal95) {
    double ss = 0.0;
    for (double x : per_run) ss += (x - a.mean) * (x - a.mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    a.half_width = 1.96 * sd / std::sqrt(n);
  }
  return a;
}

namespace {

std::string trim_lower(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Chosen option index, or nullopt when the answer cannot be parsed.
std::optional<int> parse_choice(Task task, const std::string& raw, int num_options) {
  const std::string a = trim_lower(raw);
  if (task == Task::tcv) {
    if (a == "yes") return 0;
    if (a == "no") return 1;
    return std::nullopt;
  }
  if (a.size() == 1 && a[0] >= 'a' && a[0] < 'a' + num_options) return a[0] - 'a';
  return std::nullopt;
}

enum class Outcome { correct, wrong, unparseable };

Outcome judge(Task task, const ScoredItem& item, const Prediction& p) {
  if (p.scores) {
    const auto& s = *p.scores;
    if (static_cast<int>(s.size()) != item.num_options) return Outcome::unparseable;
    for (double x : s) {
      if (!std::isfinite(x)) return Outcome::unparseable;
    }
    // Strict: the key's score must exceed every other option's score.
    for (int k = 0; k < item.num_options; ++k) {
      if (k != item.answer_index && !(s[item.answer_index] > s[k])) return Outcome::wrong;
    }
    return Outcome::correct;
  }
  const auto choice = parse_choice(task, *p.answer, item.num_options);
  if (!choice) return Outcome::unparseable;
  return *choice == item.answer_index ? Outcome::correct : Outcome::wrong;
}

ScoreReport score_task(Task task, const ScoringManifest& manifest, std::span<const Prediction> predictions,
                       IntervalMode mode) {
  std::map<std::string, const ScoredItem*> items;
  for (const auto& it : manifest.items) items[it.id] = &it;

  std::map<std::string, std::map<std::string, const Prediction*>> by_run;
  std::set<std::string> unknown;
  for (const auto& p : predictions) {
    auto& slot = by_run[p.run][p.id];
    if (slot) {
      throw AmbiguousLog("duplicate prediction for item " + p.id + " in run " + p.run + " (lines " +
                         std::to_string(slot->line) + " and " + std::to_string(p.line) + ")");
    }
    slot = &p;
    if (!items.count(p.id)) unknown.insert(p.id);
  }
  if (by_run.empty()) by_run["0"];

  ScoreReport r;
  r.task = task;
  r.items = static_cast<long>(manifest.items.size());
  r.interval_mode = mode;
  r.unknown_ids.assign(unknown.begin(), unknown.end());
  std::vector<double> accuracies;
  for (const auto& [run, preds] : by_run) {
    RunScore rs;
    rs.run = run;
    for (const auto& item : manifest.items) {
      ++rs.tally.total;
      auto& stride = r.per_stride[item.stride];
      ++stride.total;
      const auto it = preds.find(item.id);
      if (it == preds.end()) {
        ++rs.missing;
        continue;
      }
      switch (judge(task, item, *it->second)) {
        case Outcome::correct:
          ++rs.tally.correct;
          ++stride.correct;
          break;
        case Outcome::wrong:
          break;
        case Outcome::unparseable:
          ++rs.parse_failures;
          r.parse_failure_ids.push_back(run + "/" + item.id);
          break;
      }
    }
    r.overall.correct += rs.tally.correct;
    r.overall.total += rs.tally.total;
    r.missing += rs.missing;
    r.parse_failures += rs.parse_failures;
    accuracies.push_back(rs.tally.accuracy());
    r.runs.push_back(std::move(rs));
  }
  r.aggregate = aggregate_runs(accuracies, mode);
  return r;
}

}  // namespace

ScoreReport score_nfs(const ScoringManifest& manifest, std::span<const Prediction> predictions, IntervalMode mode) {
  return score_task(Task::nfs, manifest, predictions, mode);
}

ScoreReport score_tcv(const ScoringManifest& manifest, std::span<const Prediction> predictions, IntervalMode mode) {
  return score_task(Task::tcv, manifest, predictions, mode);
}

ScoreReport score(const ScoringManifest& manifest, std::span<const Prediction> predictions, IntervalMode mode) {
  return manifest.task == Task::nfs ? score_nfs(manifest, predictions, mode)
                                    : score_tcv(manifest, predictions, mode);
}

namespace {

json tally_json(const Tally& t) {
  return {{"correct", t.correct}, {"total", t.total}, {"accuracy", t.accuracy()}};
}

}  // namespace

json report_json(const ScoreReport& r) {
  json per_stride = json::object();
  for (const auto& [s, t] : r.per_stride) per_stride[std::to_string(s)] = tally_json(t);
  json runs = json::array();
  for (const auto& rs : r.runs) {
    runs.push_back({{"run", rs.run},
                    {"correct", rs.tally.correct},
                    {"total", rs.tally.total},
                    {"accuracy", rs.tally.accuracy()},
                    {"missing", rs.missing},
                    {"parse_failures", rs.parse_failures}});
  }
  json out{{"task", r.task == Task::nfs ? "nfs" : "tcv"},
           {"items", r.items},
           {"overall", tally_json(r.overall)},
           {"accuracy", r.overall.accuracy()},
           {"per_stride", per_stride},
           {"runs", runs},
           {"mean", r.aggregate.mean},
           {"half_width", r.aggregate.half_width},
           {"interval", r.interval_mode == IntervalMode::normal95 ? "normal95" : "none"},
           {"missing", r.missing},
           {"parse_failures", r.parse_failures},
           {"parse_failure_ids", r.parse_failure_ids},
           {"unknown_ids", r.unknown_ids},
           {"missing_and_unparseable_policy", "counted incorrect"}};
  if (r.task == Task::tcv) out["convention"] = kTcvConvention;
  return out;
}

std::string report_text(const ScoreReport& r) {
  std::ostringstream os;
  char buf[160];
  os << (r.task == Task::nfs ? "NFS" : "TCV") << " score report\n";
  if (r.task == Task::tcv) os << kTcvConvention << "\n";
  os << "missing and unparseable answers are counted incorrect\n\n";
  std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %9s %8s %8s\n", "run", "correct", "total", "accuracy", "missing",
                "unparsed");
  os << buf;
  for (const auto& rs : r.runs) {
    std::snprintf(buf, sizeof(buf), "%-12s %8ld %8ld %9.4f %8ld %8ld\n", rs.run.c_str(), rs.tally.correct,
                  rs.tally.total, rs.tally.accuracy(), rs.missing, rs.parse_failures);
    os << buf;
  }
  os << "\n";
  for (const auto& [s, t] : r.per_stride) {
    std::snprintf(buf, sizeof(buf), "stride %-5d %8ld %8ld %9.4f\n", s, t.correct, t.total, t.accuracy());
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "\noverall      %8ld %8ld %9.4f\n", r.overall.correct, r.overall.total,
                r.overall.accuracy());
  os << buf;
  std::snprintf(buf, sizeof(buf), "mean over %zu run(s): %.4f +/- %.4f (%s)\n", r.runs.size(), r.aggregate.mean,
                r.aggregate.half_width, r.interval_mode == IntervalMode::normal95 ? "95% normal" : "no interval");
  os << buf;
  if (!r.unknown_ids.empty()) os << r.unknown_ids.size() << " prediction id(s) not in manifest, ignored\n";
  return os.str();
}

}  // namespace sdfforge
