#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace sdfforge {

struct ServeOptions {
  std::filesystem::path root;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> ui_dir;  // static frontend, mounted at /
  int page_size = 50;
};

inline constexpr const char* kDecisionLogPath = "review/decisions.jsonl";

// HTTP API over an artifact root for the review frontend.
class ReviewServer {
 public:
  explicit ReviewServer(ServeOptions options);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  // Returns the bound port. Throws PortInUse.
  int bind();
  // Blocks until stop().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sdfforge
