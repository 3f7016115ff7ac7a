#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpv/annotation.hpp"
#include "mpv/error.hpp"

namespace mpv {

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// Static UI bundle mounted at "/" when set.
  std::optional<std::filesystem::path> static_dir;
};

/// REST front end for an AnnotationStore. Every response body is
/// `{"ok": true, "data": ...}` or `{"ok": false, "error": {"code", "message"}}`.
///
///   GET  /api/runs
///   GET  /api/runs/{id}/statements?annotator=&status=pending
///   POST /api/runs/{id}/statements
///   POST /api/runs/{id}/judgments
///   GET  /api/runs/{id}/disagreements
///   POST /api/runs/{id}/adjudications
///   GET  /api/runs/{id}/stats
///
/// The annotator may also be given in the `X-Annotator-Id` header.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerOptions options = {});
  ~AnnotationServer();

  /// Binds `port` (0 picks a free one) and returns the bound port. Throws
  /// PortInUse.
  int bind(int port);
  /// Serves until `stop()`; requires a prior `bind`.
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status used for an error code in API responses.
int http_status_for(Errc code);

/// Statements of every stored final output in a run directory. Ids are opaque
/// hashes so annotators cannot tell model or phase; `origins` receives the
/// mapping back to "<model>/<phase>/<transcript>/<statement>".
std::vector<Statement> collect_run_statements(const std::filesystem::path& run_dir,
                                              std::map<std::string, std::string>* origins = nullptr);

}  // namespace mpv
