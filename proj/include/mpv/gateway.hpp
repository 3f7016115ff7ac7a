#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpv/domain.hpp"

namespace mpv {

struct DecodingParams {
  double temperature = 0.2;
  double top_p = 0.9;
  int top_k = 40;
  int max_tokens = 2048;

  void validate() const;
  static DecodingParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  bool operator==(const DecodingParams&) const = default;
};

struct EndpointConfig {
  std::string base_url;
  std::string model_label;
  std::string model;  // name sent on the wire; defaults to model_label
  std::chrono::milliseconds timeout{120'000};
  int max_concurrency = 4;
  int retry_budget = 3;
  std::chrono::milliseconds backoff_base{500};
  std::string api_key_env = "MPV_API_KEY";

  void validate() const;
  static EndpointConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Identifies a request for scripted replay. `pass` is 0 for analysis, the
/// scope's theme-verify pass count for frequency counting, and the 1-based pass
/// number for verification stages. `attempt` is the repair attempt.
struct RequestTag {
  std::string stage;
  std::string transcript_id;
  int pass = 0;
  int attempt = 0;

  std::string key() const;
};

namespace stage {
inline constexpr const char* kAnalysis = "analysis";
inline constexpr const char* kThemeVerify = "theme_verify";
inline constexpr const char* kFrequency = "frequency";
inline constexpr const char* kFrequencyVerify = "frequency_verify";
}  // namespace stage

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  DecodingParams params;
  RequestTag tag;

  /// OpenAI-compatible chat-completion body.
  nlohmann::json to_wire() const;
};

struct ChatReply {
  std::string content;
  std::chrono::milliseconds latency{0};
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Throws TransportError for retryable failures, Error otherwise.
  virtual ChatReply complete(const ChatRequest& request) = 0;
  /// True when reported latencies are scripted rather than measured.
  virtual bool scripted_timing() const { return false; }
};

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(EndpointConfig config);
  ChatReply complete(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
};

/// One scripted reply. `fail_times` leading calls for the key fail with
/// `status` (HTTP error) or `error` ("connection_refused" / "timeout").
struct MockEntry {
  std::string stage;
  std::string transcript_id;
  int pass = 0;
  int attempt = 0;
  std::string response;
  int status = 200;
  int fail_times = 0;
  std::string error;
  long latency_ms = 0;
};

/// Scripted backend keyed by (stage, transcript_id, pass, attempt), never by
/// arrival order. Lookup falls back from "<id>@r<k>..." (TCS repeat) to the
/// same id without the repeat marker, then to transcript_id "*".
class MockChatBackend final : public ChatBackend {
 public:
  explicit MockChatBackend(std::vector<MockEntry> entries);
  static std::shared_ptr<MockChatBackend> from_json(const nlohmann::json& script);
  static std::shared_ptr<MockChatBackend> load(const std::filesystem::path& file);

  ChatReply complete(const ChatRequest& request) override;
  bool scripted_timing() const override { return true; }

  std::vector<ChatRequest> captured() const;
  std::size_t call_count() const;

 private:
  const MockEntry* find(const RequestTag& tag) const;

  std::vector<MockEntry> entries_;
  std::map<std::string, std::size_t> index_;  // key -> entries_ index
  mutable std::mutex mutex_;
  std::map<std::string, int> failures_served_;
  std::vector<ChatRequest> captured_;
};

nlohmann::json mock_script_to_json(const std::vector<MockEntry>& entries);

struct ChatExchange {
  std::string system_prompt;
  std::string user_prompt;
  std::string raw_response;
  std::chrono::milliseconds latency{0};
  int repair_count = 0;
  int retries = 0;
  RequestTag tag;
};

struct GatewayStats {
  std::size_t requests = 0;
  std::size_t successes = 0;
  std::size_t retries = 0;
  std::size_t failures = 0;
  long long latency_ms = 0;

  nlohmann::json to_json() const;
};

enum class ExpectedSchema { ThemeSchema, FrequencySchema };

struct StructuredOutput {
  std::variant<ThemeSet, FrequencyReport> value;
  int repair_count = 0;
  std::vector<std::string> warnings;
  std::vector<ChatExchange> exchanges;
  std::chrono::milliseconds latency{0};

  const ThemeSet& themes() const { return std::get<ThemeSet>(value); }
  const FrequencyReport& frequencies() const { return std::get<FrequencyReport>(value); }
};

inline constexpr int kDefaultMaxRepairs = 2;

/// Uniform access to one endpoint: decoding parameters, bounded concurrency,
/// transport retries with exponential backoff, and the structured-output
/// repair loop. Stateless per request and thread-safe.
class Gateway {
 public:
  Gateway(EndpointConfig endpoint, std::shared_ptr<ChatBackend> backend,
          DecodingParams params = {});

  /// Errors: EndpointFailure once the retry budget is spent, or immediately
  /// for non-retryable backend errors.
  ChatExchange chat(const std::string& system, const std::string& user, const RequestTag& tag);

  /// Re-prompts up to `max_repairs` times with a corrective line appended to
  /// the original user prompt. Frequency ids that do not resolve in `scope`
  /// are dropped with a warning instead of triggering a repair.
  /// Errors: StructuredOutputFailure, EndpointFailure.
  StructuredOutput generate_structured(const std::string& system, const std::string& user,
                                       ExpectedSchema expected, const ThemeSet* scope,
                                       RequestTag tag, int max_repairs = kDefaultMaxRepairs);

  const EndpointConfig& endpoint() const { return endpoint_; }
  const DecodingParams& params() const { return params_; }
  bool scripted_timing() const { return backend_->scripted_timing(); }
  GatewayStats stats() const;

 private:
  EndpointConfig endpoint_;
  std::shared_ptr<ChatBackend> backend_;
  DecodingParams params_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
  mutable std::mutex stats_mutex_;
  GatewayStats stats_;
};

/// The corrective line appended on repair attempts.
std::string repair_instruction(const std::string& parse_error);

}  // namespace mpv
