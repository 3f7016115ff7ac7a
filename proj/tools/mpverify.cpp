// mpverify: multi-pass verification runs, evaluation, reports and the
// annotation service.

#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "mpv/annotation.hpp"
#include "mpv/annotation_server.hpp"
#include "mpv/domain.hpp"
#include "mpv/error.hpp"
#include "mpv/evaluation.hpp"
#include "mpv/report.hpp"
#include "mpv/run.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;

struct CommonArgs {
  std::string config;
  std::string run_id;
  std::string out;
  std::string mock;
};

fs::path runs_root(const CommonArgs& a) {
  if (!a.out.empty()) return a.out;
  if (!a.config.empty()) return mpv::RunConfig::load(a.config).output_dir;
  return "runs";
}

fs::path run_dir(const CommonArgs& a) {
  if (a.run_id.empty()) throw mpv::Error(mpv::Errc::ConfigError, "--run-id is required");
  return runs_root(a) / a.run_id;
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON run configuration");
  cmd->add_option("--run-id", a.run_id, "Run identifier");
  cmd->add_option("--out", a.out, "Runs root directory (overrides the config)");
  cmd->add_option("--mock", a.mock, "Scripted chat backend (JSON script)");
}

int serve(const fs::path& root, const std::string& run_id, int port, std::optional<fs::path> ui_dir) {
  // Block termination signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  mpv::AnnotationStore store(root);
  if (!store.has_run(run_id)) throw mpv::Error(mpv::Errc::UnknownRun, "run \"" + run_id + "\" does not exist");
  std::map<std::string, std::string> origins;
  const auto count = store.enqueue_statements(run_id, mpv::collect_run_statements(root / run_id, &origins));
  // Unblinding key for analysis; never served over the API.
  mpv::write_file_atomic(root / run_id / "annotations" / "statement_origins.json",
                         nlohmann::json(origins).dump(2) + "\n");

  mpv::ServerOptions options;
  options.static_dir = std::move(ui_dir);
  mpv::AnnotationServer server(store, options);
  const int bound = server.bind(port);
  std::cout << "serving run " << run_id << " (" << count << " statements) on http://127.0.0.1:" << bound
            << std::endl;
  std::thread worker([&server] { server.listen(); });
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  worker.join();
  store.flush();
  std::cout << "stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-pass prompt verification and hallucination-aware evaluation"};
  app.require_subcommand(1);

  CommonArgs run_args, eval_args, report_args, sens_args, ablate_args, serve_args;
  std::string gold, evaluation_file, ui_dir;
  double threshold = 0.0;
  int passes = 0;
  int port = 8080;

  auto* run = app.add_subcommand("run", "Execute the pipeline for every transcript, endpoint and phase");
  add_common(run, run_args);
  run->get_option("--config")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Compute the eight metrics for a stored run");
  add_common(evaluate, eval_args);
  evaluate->add_option("--gold", gold, "Gold-standard directory (overrides the run config)");
  evaluate->add_option("--threshold", threshold, "Similarity threshold (overrides the run config)");

  auto* report = app.add_subcommand("report", "Write report.csv, table1.csv and report.txt");
  add_common(report, report_args);
  report->add_option("--evaluation", evaluation_file, "Evaluation JSON (default: the run's evaluation.json)");

  auto* sensitivity = app.add_subcommand("sensitivity", "Re-match at every configured threshold");
  add_common(sensitivity, sens_args);
  sensitivity->add_option("--gold", gold, "Gold-standard directory");

  auto* ablate = app.add_subcommand("ablate", "Replay evaluation truncated at a pass count");
  add_common(ablate, ablate_args);
  ablate->add_option("--passes", passes, "Verification passes to keep")->required()->check(CLI::Range(0, 3));
  ablate->add_option("--gold", gold, "Gold-standard directory");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the annotation API for a run");
  add_common(serve_cmd, serve_args);
  serve_cmd->add_option("--port", port, "TCP port (0 picks a free one)");
  serve_cmd->add_option("--ui", ui_dir, "Static UI bundle to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::optional<fs::path> gold_dir = gold.empty() ? std::nullopt : std::optional<fs::path>(gold);
  try {
    if (*run) {
      auto config = mpv::RunConfig::load(run_args.config);
      mpv::RunOptions options;
      if (!run_args.run_id.empty()) options.run_id = run_args.run_id;
      if (!run_args.out.empty()) options.output_dir = run_args.out;
      if (!run_args.mock.empty()) options.mock_script = run_args.mock;
      const auto outcome = mpv::cmd_run(config, options);
      std::cout << outcome.run_id << "\n" << outcome.run_dir.string() << std::endl;
      if (outcome.exit_code != 0) std::cerr << "error: no endpoint request succeeded" << std::endl;
      return outcome.exit_code;
    }
    if (*evaluate) {
      mpv::EvaluateOptions options;
      options.gold_dir = gold_dir;
      if (evaluate->count("--threshold") > 0) options.threshold = threshold;
      std::cout << mpv::cmd_evaluate(run_dir(eval_args), options).string() << std::endl;
    } else if (*report) {
      const fs::path file =
          evaluation_file.empty() ? run_dir(report_args) / "evaluation.json" : fs::path(evaluation_file);
      for (const auto& f : mpv::cmd_report(file)) std::cout << f.string() << "\n";
    } else if (*sensitivity) {
      std::cout << mpv::cmd_sensitivity(run_dir(sens_args), gold_dir).string() << std::endl;
    } else if (*ablate) {
      mpv::EvaluateOptions options;
      options.gold_dir = gold_dir;
      std::cout << mpv::cmd_ablate(run_dir(ablate_args), passes, options).string() << std::endl;
    } else if (*serve_cmd) {
      std::optional<fs::path> ui;
      if (!ui_dir.empty()) ui = ui_dir;
      if (!ui && !serve_args.config.empty()) ui = mpv::RunConfig::load(serve_args.config).ui_dir;
      if (serve_args.run_id.empty()) throw mpv::Error(mpv::Errc::ConfigError, "--run-id is required");
      return serve(runs_root(serve_args), serve_args.run_id, port, ui);
    }
  } catch (const mpv::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return e.code() == mpv::Errc::ConfigError ? kExitConfig : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitError;
  }
  return 0;
}
