#include "mpv/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "mpv/error.hpp"
#include "mpv/http.hpp"

namespace mpv {

using nlohmann::json;

void DecodingParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(Errc::ConfigError, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(Errc::ConfigError, "top_p must be in (0, 1]");
  if (top_k < 1) throw Error(Errc::ConfigError, "top_k must be >= 1");
  if (max_tokens < 1) throw Error(Errc::ConfigError, "max_tokens must be >= 1");
}

DecodingParams DecodingParams::from_json(const json& j) {
  DecodingParams p;
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.top_k = j.value("top_k", p.top_k);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.validate();
  return p;
}

json DecodingParams::to_json() const {
  return json{{"temperature", temperature}, {"top_p", top_p}, {"top_k", top_k},
              {"max_tokens", max_tokens}};
}

void EndpointConfig::validate() const {
  if (model_label.empty()) throw Error(Errc::ConfigError, "endpoint model_label must be non-empty");
  if (timeout.count() <= 0) throw Error(Errc::ConfigError, "endpoint timeout must be > 0");
  if (max_concurrency < 1) throw Error(Errc::ConfigError, "endpoint max_concurrency must be >= 1");
  if (retry_budget < 0) throw Error(Errc::ConfigError, "endpoint retry_budget must be >= 0");
}

EndpointConfig EndpointConfig::from_json(const json& j) {
  EndpointConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.model_label = j.value("model_label", c.model_label);
  c.model = j.value("model", c.model_label);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long>(c.timeout.count())));
  c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  c.retry_budget = j.value("retry_budget", c.retry_budget);
  c.backoff_base =
      std::chrono::milliseconds(j.value("backoff_ms", static_cast<long>(c.backoff_base.count())));
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.validate();
  return c;
}

json EndpointConfig::to_json() const {
  return json{{"base_url", base_url},       {"model_label", model_label},
              {"model", model},             {"timeout_ms", timeout.count()},
              {"max_concurrency", max_concurrency}, {"retry_budget", retry_budget},
              {"backoff_ms", backoff_base.count()}, {"api_key_env", api_key_env}};
}

std::string RequestTag::key() const {
  return stage + "|" + transcript_id + "|" + std::to_string(pass) + "|" + std::to_string(attempt);
}

json ChatRequest::to_wire() const {
  return json{{"model", model},
              {"messages", json::array({json{{"role", "system"}, {"content", system}},
                                        json{{"role", "user"}, {"content", user}}})},
              {"temperature", params.temperature},
              {"top_p", params.top_p},
              {"top_k", params.top_k},
              {"max_tokens", params.max_tokens}};
}

// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(EndpointConfig config) : config_(std::move(config)) {}

ChatReply HttpChatBackend::complete(const ChatRequest& request) {
  HttpRequestOptions options;
  options.timeout = config_.timeout;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
      options.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  const auto started = std::chrono::steady_clock::now();
  const auto resp =
      http_post_json(config_.base_url, "/v1/chat/completions", request.to_wire().dump(), options);
  const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  if (resp.status < 200 || resp.status >= 300)
    throw TransportError(Errc::HttpError, resp.status, "HTTP " + std::to_string(resp.status));
  try {
    const auto j = json::parse(resp.body);
    return ChatReply{j.at("choices").at(0).at("message").at("content").get<std::string>(), latency};
  } catch (const json::exception& e) {
    throw TransportError(Errc::HttpError, resp.status,
                         std::string("unreadable chat-completion body: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

MockChatBackend::MockChatBackend(std::vector<MockEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const RequestTag tag{e.stage, e.transcript_id, e.pass, e.attempt};
    if (!index_.emplace(tag.key(), i).second)
      throw Error(Errc::ConfigError, "duplicate mock script entry " + tag.key());
  }
}

std::shared_ptr<MockChatBackend> MockChatBackend::from_json(const json& script) {
  if (!script.is_array()) throw Error(Errc::ConfigError, "mock script must be a JSON array");
  std::vector<MockEntry> entries;
  for (const auto& item : script) {
    MockEntry e;
    try {
      e.stage = item.at("stage").get<std::string>();
      e.transcript_id = item.at("transcript_id").get<std::string>();
      e.pass = item.value("pass", 0);
      e.attempt = item.value("attempt", 0);
      e.response = item.value("response", std::string());
      e.status = item.value("status", 200);
      e.fail_times = item.value("fail_times", 0);
      e.error = item.value("error", std::string());
      e.latency_ms = item.value("latency_ms", 0L);
    } catch (const json::exception& ex) {
      throw Error(Errc::ConfigError, std::string("bad mock script entry: ") + ex.what());
    }
    entries.push_back(std::move(e));
  }
  return std::make_shared<MockChatBackend>(std::move(entries));
}

std::shared_ptr<MockChatBackend> MockChatBackend::load(const std::filesystem::path& file) {
  try {
    return from_json(json::parse(read_file(file)));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, file.string() + ": " + e.what());
  }
}

json mock_script_to_json(const std::vector<MockEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json j{{"stage", e.stage},
           {"transcript_id", e.transcript_id},
           {"pass", e.pass},
           {"attempt", e.attempt},
           {"response", e.response}};
    if (e.fail_times > 0) {
      j["fail_times"] = e.fail_times;
      j["status"] = e.status;
    }
    if (!e.error.empty()) j["error"] = e.error;
    if (e.latency_ms != 0) j["latency_ms"] = e.latency_ms;
    arr.push_back(std::move(j));
  }
  return arr;
}

const MockEntry* MockChatBackend::find(const RequestTag& tag) const {
  auto lookup = [&](const std::string& tid) -> const MockEntry* {
    const RequestTag t{tag.stage, tid, tag.pass, tag.attempt};
    auto it = index_.find(t.key());
    return it == index_.end() ? nullptr : &entries_[it->second];
  };
  if (auto* e = lookup(tag.transcript_id)) return e;
  // "<id>@r<k>[#<seg>]" -> "<id>[#<seg>]"
  if (const auto at = tag.transcript_id.find("@r"); at != std::string::npos) {
    auto end = tag.transcript_id.find('#', at);
    std::string stripped = tag.transcript_id.substr(0, at);
    if (end != std::string::npos) stripped += tag.transcript_id.substr(end);
    if (auto* e = lookup(stripped)) return e;
  }
  return lookup("*");
}

ChatReply MockChatBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  captured_.push_back(request);
  const MockEntry* e = find(request.tag);
  if (!e) throw Error(Errc::MockScriptMiss, "no mock entry for " + request.tag.key());
  auto& served = failures_served_[request.tag.key()];
  if (served < e->fail_times) {
    ++served;
    if (e->error == "connection_refused")
      throw TransportError(Errc::ConnectionRefused, 0, "scripted connection refused");
    if (e->error == "timeout") throw TransportError(Errc::Timeout, 0, "scripted timeout");
    throw TransportError(Errc::HttpError, e->status, "scripted HTTP " + std::to_string(e->status));
  }
  return ChatReply{e->response, std::chrono::milliseconds(e->latency_ms)};
}

std::vector<ChatRequest> MockChatBackend::captured() const {
  std::lock_guard lock(mutex_);
  return captured_;
}

std::size_t MockChatBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return captured_.size();
}

// ---------------------------------------------------------------------------

json GatewayStats::to_json() const {
  return json{{"requests", requests},   {"successes", successes}, {"retries", retries},
              {"failures", failures},   {"latency_ms", latency_ms}};
}

Gateway::Gateway(EndpointConfig endpoint, std::shared_ptr<ChatBackend> backend,
                 DecodingParams params)
    : endpoint_(std::move(endpoint)), backend_(std::move(backend)), params_(params) {
  endpoint_.validate();
  params_.validate();
  if (endpoint_.model.empty()) endpoint_.model = endpoint_.model_label;
  if (!backend_) throw Error(Errc::InvalidArgument, "null chat backend");
  slots_ = std::make_unique<std::counting_semaphore<1024>>(std::min(endpoint_.max_concurrency, 1024));
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

ChatExchange Gateway::chat(const std::string& system, const std::string& user,
                           const RequestTag& tag) {
  ChatRequest request{endpoint_.model, system, user, params_, tag};
  ChatExchange exchange;
  exchange.system_prompt = system;
  exchange.user_prompt = user;
  exchange.tag = tag;

  slots_->acquire();
  struct Release {
    std::counting_semaphore<1024>* s;
    ~Release() { s->release(); }
  } release{slots_.get()};

  std::string last_error;
  for (int attempt = 0; attempt <= endpoint_.retry_budget; ++attempt) {
    if (attempt > 0) {
      exchange.retries = attempt;
      {
        std::lock_guard lock(stats_mutex_);
        ++stats_.retries;
      }
      if (!backend_->scripted_timing())
        std::this_thread::sleep_for(endpoint_.backoff_base * (1LL << std::min(attempt - 1, 10)));
    }
    {
      std::lock_guard lock(stats_mutex_);
      ++stats_.requests;
    }
    try {
      auto reply = backend_->complete(request);
      exchange.raw_response = std::move(reply.content);
      exchange.latency = reply.latency;
      std::lock_guard lock(stats_mutex_);
      ++stats_.successes;
      stats_.latency_ms += reply.latency.count();
      return exchange;
    } catch (const TransportError& e) {
      last_error = e.what();
      if (!e.retryable()) break;
    } catch (const Error& e) {
      last_error = e.what();
      break;
    }
  }
  {
    std::lock_guard lock(stats_mutex_);
    ++stats_.failures;
  }
  throw Error(Errc::EndpointFailure,
              endpoint_.model_label + " " + tag.key() + ": " + last_error);
}

std::string repair_instruction(const std::string& parse_error) {
  return "Your previous reply could not be parsed: " + parse_error +
         "\nReturn only the JSON object.";
}

StructuredOutput Gateway::generate_structured(const std::string& system, const std::string& user,
                                              ExpectedSchema expected, const ThemeSet* scope,
                                              RequestTag tag, int max_repairs) {
  StructuredOutput out;
  std::string last_error;
  for (int attempt = 0; attempt <= max_repairs; ++attempt) {
    tag.attempt = attempt;
    const std::string prompt =
        attempt == 0 ? user : user + "\n\n" + repair_instruction(last_error);
    auto exchange = chat(system, prompt, tag);
    exchange.repair_count = attempt;
    out.latency += exchange.latency;
    const std::string raw = exchange.raw_response;
    out.exchanges.push_back(std::move(exchange));
    try {
      if (expected == ExpectedSchema::ThemeSchema) {
        out.value = parse_theme_set(raw);
      } else {
        auto report = parse_frequency_payload(raw);
        if (scope) {
          std::vector<std::string> dropped;
          report = restrict_to_scope(report, *scope, &dropped);
          for (const auto& id : dropped) out.warnings.push_back("dropped unknown id " + id);
        }
        out.value = std::move(report);
      }
      out.repair_count = attempt;
      return out;
    } catch (const Error& e) {
      if (e.code() != Errc::SchemaViolation && e.code() != Errc::NoJsonFound &&
          e.code() != Errc::DuplicateId)
        throw;
      last_error = e.what();
    }
  }
  throw Error(Errc::StructuredOutputFailure,
              tag.key() + " after " + std::to_string(max_repairs + 1) + " attempts: " + last_error);
}

}  // namespace mpv
