#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace discourse {

struct ChatTurn {
  std::string role;
  std::string content;
};

struct CompletionRequest {
  std::string system_prompt;
  std::vector<ChatTurn> history;
  double temperature = 0.7;
  int max_tokens = 1024;
  std::optional<long long> seed;

  // Throws ConfigError if temperature is outside [0, 2] or max_tokens < 1.
  void validate() const;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{1000};

  // Delay before retry `attempt` (1-based: the delay after the attempt-th
  // failure). Doubles each time, so the sequence is nondecreasing.
  std::chrono::milliseconds delay_before_retry(int attempt) const;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Returns non-empty completion text or throws (TransportError, ReplayError,
  // TurnError depending on the failure).
  virtual std::string complete(const CompletionRequest& request) = 0;

  virtual std::string describe() const = 0;
};

// Cycles through a fixed response list.
class FixedResponderBackend : public Backend {
 public:
  explicit FixedResponderBackend(std::vector<std::string> responses);

  std::string complete(const CompletionRequest& request) override;
  std::string describe() const override { return "fixed-responder"; }

 private:
  std::vector<std::string> responses_;
  std::size_t cursor_ = 0;
};

struct ReplayEntry {
  int turn = 0;  // 1-based call ordinal
  std::string speaker_hint;
  std::string response;
};

// Plays back a recorded session; each complete() call consumes one entry.
class ScriptedReplayBackend : public Backend {
 public:
  explicit ScriptedReplayBackend(std::vector<ReplayEntry> entries,
                                 std::string label = "scripted");
  static ScriptedReplayBackend from_file(const std::string& path);

  std::string complete(const CompletionRequest& request) override;
  std::string describe() const override { return label_; }
  std::size_t calls_made() const { return cursor_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<ReplayEntry> entries_;
  std::string label_;
  std::size_t cursor_ = 0;
};

// Deterministic pseudo-random integer responder, used to calibrate the
// distribution probe without a live endpoint.
class SeededUniformBackend : public Backend {
 public:
  SeededUniformBackend(long long lo, long long hi, std::uint64_t seed);

  std::string complete(const CompletionRequest& request) override;
  std::string describe() const override { return "uniform"; }

 private:
  std::mt19937_64 engine_;
  long long lo_;
  long long hi_;
};

struct HttpResult {
  int status = 0;
  std::string body;
  std::string error;  // non-empty on transport failure
};

struct HttpEndpointConfig {
  std::string base_url;
  std::string model_id;
  std::string api_key_env = "DISCOURSE_API_KEY";
  RetryPolicy retry;
};

// OpenAI-compatible chat completion client. The transport and the sleep hook
// are injectable so retry behaviour is testable without a network.
class HttpEndpointBackend : public Backend {
 public:
  using Transport = std::function<HttpResult(const std::string& body)>;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpEndpointBackend(HttpEndpointConfig config);
  HttpEndpointBackend(HttpEndpointConfig config, Transport transport, Sleeper sleeper);

  std::string complete(const CompletionRequest& request) override;
  std::string describe() const override { return "http-endpoint:" + config_.model_id; }

  static std::string build_request_body(const CompletionRequest& request,
                                        const std::string& model_id);
  static std::string parse_completion_body(const std::string& body);

 private:
  HttpEndpointConfig config_;
  Transport transport_;
  Sleeper sleeper_;
};

// Parsed form of a CLI backend descriptor:
//   http:<base-url>,model=<id>[,key-env=<ENV>]
//   scripted:<fixture-path>
//   cyclic:<resp>[|<resp>...]
//   uniform:<lo>-<hi>[,seed=<s>]
struct BackendSpec {
  enum class Kind { HttpEndpoint, ScriptedReplay, FixedResponder, SeededUniform };

  Kind kind = Kind::FixedResponder;
  HttpEndpointConfig http;
  std::string fixture_path;
  std::vector<std::string> responses;
  long long lo = 0;
  long long hi = 0;
  std::uint64_t uniform_seed = 0;

  static BackendSpec parse(const std::string& descriptor);
};

// Builds a fresh backend instance. Offline fixtures are read and validated
// here, before any session starts.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

}  // namespace discourse
