#include <omp.h>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/hash.hpp"
#include "sdfforge/pipeline.hpp"
#include "sdfforge/serve.hpp"

namespace {

using namespace sdfforge;
namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMalformedLog = 3;
constexpr int kExitPortBusy = 4;

ReviewServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  int jobs = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "Config file (key = value lines)");
    cmd->add_option("--out", out, "Output root (default: $SDF_FORGE_OUT or ./sdf-forge-out)");
    cmd->add_option("--seed", seed, "Global seed");
    cmd->add_flag("--force", force, "Regenerate outputs even if current");
    cmd->add_option("--jobs", jobs, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  }

  RunOptions options() const {
    RunOptions o;
    if (!config.empty()) o.config = config;
    if (!out.empty()) o.out = out;
    o.seed = seed;
    o.force = force;
    o.jobs = jobs;
    return o;
  }
};

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const StageFailed& s) {
    return s.cause() ? exit_code_for(s.cause()) : kExitFailure;
  } catch (const ConfigError&) {
    return kExitConfig;
  } catch (const MalformedLog&) {
    return kExitMalformedLog;
  } catch (const PortInUse&) {
    return kExitPortBusy;
  } catch (...) {
    return kExitFailure;
  }
}

int run_stage(const Common& c, StageReport (*stage)(const ForgeConfig&, const fs::path&, bool)) {
  const auto opts = c.options();
  const auto cfg = resolve_config(opts);
  const auto root = output_root(opts);
  fs::create_directories(root);
  std::cout << stage(cfg, root, opts.force).summary() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fluid videos, speed-field renders, benchmarks and fine-tuning data"};
  app.require_subcommand(1);

  Common common;
  auto* simulate = app.add_subcommand("simulate", "Simulate scenes and write particle traces and RGB frames");
  auto* render = app.add_subcommand("render-sdf", "Render speed-field frames from traces");
  auto* build = app.add_subcommand("build-bench", "Build next-frame-selection and coherence items");
  auto* emit = app.add_subcommand("emit-sft", "Emit the fine-tuning dataset and mix manifest");
  auto* pipeline = app.add_subcommand("pipeline", "Run simulate, render-sdf, build-bench and emit-sft");
  auto* score = app.add_subcommand("score", "Score a prediction log against a benchmark manifest");
  auto* serve = app.add_subcommand("serve", "Serve the review API over an output root");
  auto* verify = app.add_subcommand("verify", "Check manifest closure and checksums of an output root");
  for (auto* cmd : {simulate, render, build, emit, pipeline, score, serve, verify}) common.attach(cmd);

  std::string manifest, predictions, report_dir, interval = "normal95";
  score->add_option("--manifest", manifest, "nfs.jsonl or tcv.jsonl")->required();
  score->add_option("--predictions", predictions, "Prediction log, one JSON record per line")->required();
  score->add_option("--report-dir", report_dir, "Where score.json and score.txt go (default: <out>/scores)");
  score->add_option("--interval", interval, "Across-run interval")->check(CLI::IsMember({"normal95", "none"}));

  std::string host = "127.0.0.1", ui;
  int port = 8080;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--ui", ui, "Directory with the built review frontend");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (common.jobs > 0) omp_set_num_threads(common.jobs);

  try {
    if (simulate->parsed()) return run_stage(common, cmd_simulate);
    if (render->parsed()) return run_stage(common, cmd_render_sdf);
    if (build->parsed()) return run_stage(common, cmd_build_bench);
    if (emit->parsed()) return run_stage(common, cmd_emit_sft);
    if (pipeline->parsed()) {
      const auto opts = common.options();
      const auto cfg = resolve_config(opts);
      const auto root = output_root(opts);
      fs::create_directories(root);
      for (const auto& r : cmd_pipeline(cfg, root, opts.force)) std::cout << r.summary() << "\n";
      return 0;
    }
    if (score->parsed()) {
      const auto root = output_root(common.options());
      const fs::path dir = report_dir.empty() ? root / "scores" : fs::path(report_dir);
      const auto report =
          cmd_score(manifest, predictions, dir, interval == "none" ? IntervalMode::none : IntervalMode::normal95);
      std::cout << report_text(report);
      return 0;
    }
    if (serve->parsed()) {
      ServeOptions o;
      o.root = output_root(common.options());
      o.host = host;
      o.port = port;
      if (!ui.empty()) o.ui_dir = ui;
      ReviewServer server(o);
      const int bound = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving " << o.root.string() << " on http://" << host << ":" << bound << std::endl;
      server.run();
      g_server = nullptr;
      return 0;
    }
    if (verify->parsed()) {
      const auto root = output_root(common.options());
      const auto problems = cmd_verify(root);
      for (const auto& p : problems) std::cout << p << "\n";
      if (!problems.empty()) {
        std::cout << "verify: " << problems.size() << " problem(s)\n";
        return kExitFailure;
      }
      std::cout << "verify: ok (" << list_tree(root).size() << " files)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(std::current_exception());
  }
  return kExitFailure;
}
