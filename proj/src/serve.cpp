#include "sdfforge/serve.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/review.hpp"

namespace sdfforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& error, const std::string& detail) {
  send_json(res, status, {{"error", error}, {"detail", detail}});
}

std::string frame_url(const std::string& path) { return "/frames/" + path; }

json urls(const std::vector<std::string>& paths) {
  json out = json::array();
  for (const auto& p : paths) out.push_back(frame_url(p));
  return out;
}

bool safe_relative(const fs::path& p) {
  if (p.empty() || p.is_absolute()) return false;
  return std::none_of(p.begin(), p.end(), [](const fs::path& c) { return c == ".." || c == "."; });
}

std::string content_type(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".json") return "application/json";
  if (ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

}  // namespace

struct ReviewServer::Impl {
  ServeOptions options;
  std::vector<ReviewItem> items;
  std::map<std::string, std::size_t> by_id;
  DecisionLog log;
  httplib::Server server;
  int port = -1;

  explicit Impl(ServeOptions o)
      : options(std::move(o)), items(load_review_items(options.root)), log(options.root / kDecisionLogPath) {
    for (std::size_t i = 0; i < items.size(); ++i) by_id[items[i].id] = i;
    // httplib's default also sets SO_REUSEPORT, which lets a second server
    // share a busy port instead of failing.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }

  json summary(const ReviewItem& it, const std::vector<ReviewDecision>& decisions) const {
    json latest = nullptr;
    for (const auto& d : decisions) {
      if (d.item_id == it.id) latest = decision_json(d);
    }
    return json{{"id", it.id},
                {"task", it.task},
                {"source", it.source},
                {"stride", it.stride ? json(*it.stride) : json(nullptr)},
                {"frames", urls(it.frames)},
                {"options", urls(it.options)},
                {"decision", latest}};
  }

  void routes() {
    server.Get("/api/items", [this](const httplib::Request& req, httplib::Response& res) {
      const auto decisions = log.read();
      std::optional<std::string> task, source;
      std::optional<int> stride;
      bool undecided_only = false;
      int page = 1, page_size = options.page_size;
      try {
        if (req.has_param("task")) task = req.get_param_value("task");
        if (req.has_param("source")) source = req.get_param_value("source");
        if (req.has_param("stride")) stride = std::stoi(req.get_param_value("stride"));
        if (req.has_param("undecided_only")) {
          const auto v = req.get_param_value("undecided_only");
          undecided_only = v == "1" || v == "true";
        }
        if (req.has_param("page")) page = std::stoi(req.get_param_value("page"));
        if (req.has_param("page_size")) page_size = std::stoi(req.get_param_value("page_size"));
      } catch (const std::exception&) {
        return send_error(res, 400, "bad_request", "numeric query parameter expected");
      }
      if (page < 1 || page_size < 1 || page_size > 1000) {
        return send_error(res, 400, "bad_request", "page >= 1 and 1 <= page_size <= 1000");
      }
      std::set<std::string> decided;
      for (const auto& d : decisions) decided.insert(d.item_id);
      std::vector<const ReviewItem*> hits;
      for (const auto& it : items) {
        if (task && it.task != *task) continue;
        if (source && it.source != *source) continue;
        if (stride && it.stride != stride) continue;
        if (undecided_only && decided.count(it.id)) continue;
        hits.push_back(&it);
      }
      json page_items = json::array();
      const std::size_t begin = static_cast<std::size_t>(page - 1) * page_size;
      for (std::size_t i = begin; i < hits.size() && i < begin + page_size; ++i) {
        page_items.push_back(summary(*hits[i], decisions));
      }
      send_json(res, 200,
                {{"items", page_items},
                 {"page", page},
                 {"page_size", page_size},
                 {"total", hits.size()},
                 {"pages", (hits.size() + page_size - 1) / page_size}});
    });

    server.Get("/api/items/:id", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.path_params.at("id");
      const auto found = by_id.find(id);
      if (found == by_id.end()) return send_error(res, 404, "not_found", "no item " + id);
      const auto& it = items[found->second];
      const auto decisions = log.read();
      json body = summary(it, decisions);
      json per_annotator = json::array();
      for (const auto& [key, d] : latest_decisions(decisions)) {
        if (key.first == id) per_annotator.push_back(decision_json(d));
      }
      body["decisions"] = per_annotator;
      body["record"] = it.record;
      body["checklist"] = review_checklist(it.task);
      send_json(res, 200, body);
    });

    server.Post("/api/items/:id/decision", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.path_params.at("id");
      if (!by_id.count(id)) return send_error(res, 404, "not_found", "no item " + id);
      json body;
      try {
        body = json::parse(req.body);
      } catch (const std::exception& e) {
        return send_error(res, 400, "bad_request", std::string("body is not JSON: ") + e.what());
      }
      if (!body.is_object() || !body.contains("verdict") || !body["verdict"].is_string()) {
        return send_error(res, 400, "bad_request", "body needs a string `verdict`");
      }
      ReviewDecision d;
      d.item_id = id;
      const auto verdict = parse_verdict(body["verdict"].get<std::string>());
      if (!verdict) return send_error(res, 400, "invalid_verdict", "verdict must be accept, reject or flag_ethics");
      d.verdict = *verdict;
      if (body.contains("note") && !body["note"].is_null()) {
        if (!body["note"].is_string()) return send_error(res, 400, "bad_request", "`note` must be a string");
        d.note = body["note"].get<std::string>();
      }
      if (body.contains("annotator") && !body["annotator"].is_null()) {
        if (!body["annotator"].is_string()) return send_error(res, 400, "bad_request", "`annotator` must be a string");
        d.annotator = body["annotator"].get<std::string>();
      }
      if (d.annotator.empty()) d.annotator = "anonymous";
      d.timestamp = utc_now();
      try {
        log.append(d);
      } catch (const ConfigError& e) {
        return send_error(res, 422, "invalid_decision", e.what());
      } catch (const Error& e) {
        return send_error(res, 500, "io_error", e.what());
      }
      send_json(res, 201, decision_json(d));
    });

    server.Get("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<std::string> task;
      if (req.has_param("task")) task = req.get_param_value("task");
      try {
        send_json(res, 200, export_manifest(items, log.read(), task));
      } catch (const MalformedLog& e) {
        send_error(res, 500, "malformed_log", e.what());
      }
    });

    server.Get(R"(/frames/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      const fs::path rel(req.matches[1].str());
      if (!safe_relative(rel)) return send_error(res, 400, "bad_request", "frame path must be relative to the root");
      const auto full = options.root / rel;
      std::ifstream in(full, std::ios::binary);
      if (!fs::is_regular_file(full) || !in) return send_error(res, 404, "not_found", "no file " + rel.generic_string());
      std::ostringstream ss;
      ss << in.rdbuf();
      res.status = 200;
      res.set_content(ss.str(), content_type(rel));
    });

    if (options.ui_dir) server.set_mount_point("/", options.ui_dir->string());
  }
};

ReviewServer::ReviewServer(ServeOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(o.host);
    if (impl_->port < 0) throw PortInUse("no free port on " + o.host);
  } else {
    if (!impl_->server.bind_to_port(o.host, o.port)) {
      throw PortInUse("cannot bind " + o.host + ":" + std::to_string(o.port) + " (port busy?)");
    }
    impl_->port = o.port;
  }
  return impl_->port;
}

void ReviewServer::run() { impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_) impl_->server.stop();
}

bool ReviewServer::running() const { return impl_->server.is_running(); }

}  // namespace sdfforge
