#include "mpv/annotation_server.hpp"

#include <httplib.h>
#include <sys/socket.h>

#include <mutex>
#include <thread>

#include "mpv/error.hpp"

namespace mpv {

using nlohmann::json;

int http_status_for(Errc code) {
  switch (code) {
    case Errc::UnknownRun:
    case Errc::UnknownStatement:
    case Errc::UnknownAnnotator:
      return 404;
    case Errc::AlreadyAdjudicated:
    case Errc::NotADisagreement:
    case Errc::NoCompleteJudgments:
      return 409;
    case Errc::IoError:
      return 500;
    default:
      return 400;
  }
}

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ok(httplib::Response& res, const json& data, int status = 200) {
  send(res, status, json{{"ok", true}, {"data", data}});
}

void fail(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send(res, status,
       json{{"ok", false}, {"error", {{"code", std::string(code)}, {"message", message}}}});
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      fail(res, http_status_for(e.code()), errc_name(e.code()), e.what());
    } catch (const json::exception& e) {
      fail(res, 400, "SchemaViolation", e.what());
    } catch (const std::exception& e) {
      fail(res, 500, "InternalError", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  auto body = json::parse(req.body.empty() ? std::string("{}") : req.body);
  if (!body.is_object()) throw Error(Errc::SchemaViolation, "request body must be a JSON object");
  return body;
}

std::string annotator_of(const httplib::Request& req, const json* body = nullptr) {
  if (body && body->contains("annotator_id")) return body->at("annotator_id").get<std::string>();
  if (req.has_param("annotator")) return req.get_param_value("annotator");
  return req.get_header_value("X-Annotator-Id");
}

json queue_item_json(const QueueItem& item) {
  json j = to_json(item.statement);
  j["own_status"] = item.own_status ? json(std::string(to_string(*item.own_status))) : json(nullptr);
  j["adjudicated"] = item.adjudicated;
  return j;
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  ServerOptions options;
  httplib::Server server;
  std::mutex mutex;
  bool bound = false;
  bool listening = false;
  bool stop_requested = false;

  /// httplib closes its socket only when stopping a running server, so a
  /// bound socket that never served is released by serving it briefly.
  void release_unserved() {
    std::thread t([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    server.stop();
    t.join();
  }

  Impl(AnnotationStore& s, ServerOptions o) : store(s), options(std::move(o)) {
    // httplib defaults to SO_REUSEPORT, which would let two servers share a
    // port silently.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
  }

  void routes() {
    server.Get("/api/runs", guarded([this](const httplib::Request&, httplib::Response& res) {
                 json data = json::array();
                 for (const auto& id : store.runs()) data.push_back(json{{"run_id", id}});
                 ok(res, data);
               }));

    server.Get(R"(/api/runs/([^/]+)/statements)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run_id = req.matches[1];
                 const auto status = req.has_param("status") ? req.get_param_value("status") : "";
                 if (!status.empty() && status != "pending" && status != "all")
                   throw Error(Errc::InvalidArgument, "status must be \"pending\" or \"all\"");
                 const auto annotator = annotator_of(req);
                 if (status == "pending" && annotator.empty())
                   throw Error(Errc::InvalidArgument, "pending queue requires an annotator");
                 json data = json::array();
                 for (const auto& item : store.queue(run_id, annotator, status == "pending"))
                   data.push_back(queue_item_json(item));
                 ok(res, data);
               }));

    server.Post(R"(/api/runs/([^/]+)/statements)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string run_id = req.matches[1];
                  const auto body = parse_body(req);
                  std::vector<Statement> statements;
                  for (const auto& s : body.at("statements")) statements.push_back(statement_from_json(s));
                  ok(res, json{{"count", store.enqueue_statements(run_id, statements)}});
                }));

    server.Post(R"(/api/runs/([^/]+)/judgments)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string run_id = req.matches[1];
                  auto body = parse_body(req);
                  body["annotator_id"] = annotator_of(req, &body);
                  body.erase("timestamp");
                  auto stored = store.submit_judgment(run_id, judgment_from_json(body));
                  ok(res, to_json(stored), 201);
                }));

    server.Get(R"(/api/runs/([^/]+)/disagreements)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run_id = req.matches[1];
                 json data = json::array();
                 for (const auto& d : store.disagreements(run_id))
                   data.push_back(json{{"statement", to_json(d.statement)},
                                       {"judgment_a", to_json(d.judgment_a)},
                                       {"judgment_b", to_json(d.judgment_b)}});
                 ok(res, data);
               }));

    server.Post(R"(/api/runs/([^/]+)/adjudications)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string run_id = req.matches[1];
                  auto body = parse_body(req);
                  body.erase("timestamp");
                  auto stored = store.adjudicate(run_id, adjudication_from_json(body));
                  ok(res, to_json(stored), 201);
                }));

    server.Get(R"(/api/runs/([^/]+)/stats)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run_id = req.matches[1];
                 ok(res, store.stats(run_id).to_json());
               }));

    if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(int port) {
  if (port < 0 || port > 65535) throw Error(Errc::PortInUse, "invalid port " + std::to_string(port));
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (impl_->server.bind_to_port(impl_->options.host, port)) {
    bound = port;
  }
  if (bound <= 0)
    throw Error(Errc::PortInUse, "cannot bind " + impl_->options.host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void AnnotationServer::listen() {
  {
    std::lock_guard lock(impl_->mutex);
    if (!impl_->bound) throw Error(Errc::InvalidArgument, "bind() must precede listen()");
    if (impl_->stop_requested || impl_->listening) return;
    impl_->listening = true;
  }
  impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
  {
    std::lock_guard lock(impl_->mutex);
    if (!impl_->bound || impl_->stop_requested) return;
    impl_->stop_requested = true;
    if (!impl_->listening) {
      impl_->release_unserved();
      return;
    }
  }
  // listen() may not have reached the accept loop yet.
  impl_->server.wait_until_ready();
  impl_->server.stop();
}

bool AnnotationServer::running() const { return impl_->server.is_running(); }

}  // namespace mpv
