#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "discourse/backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "discourse/errors.hpp"

namespace discourse {

using nlohmann::json;

void CompletionRequest::validate() const {
  if (temperature < 0.0 || temperature > 2.0)
    throw ConfigError("temperature must be within [0, 2], got " + std::to_string(temperature));
  if (max_tokens < 1)
    throw ConfigError("max_tokens must be at least 1, got " + std::to_string(max_tokens));
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int attempt) const {
  auto delay = initial_delay;
  for (int i = 1; i < attempt; ++i) delay *= 2;
  return delay;
}

FixedResponderBackend::FixedResponderBackend(std::vector<std::string> responses)
    : responses_(std::move(responses)) {
  if (responses_.empty()) throw ConfigError("fixed responder needs at least one response");
  for (const auto& r : responses_)
    if (r.empty()) throw ConfigError("fixed responder responses must be non-empty");
}

std::string FixedResponderBackend::complete(const CompletionRequest& request) {
  request.validate();
  const std::string& r = responses_[cursor_ % responses_.size()];
  ++cursor_;
  return r;
}

ScriptedReplayBackend::ScriptedReplayBackend(std::vector<ReplayEntry> entries, std::string label)
    : entries_(std::move(entries)), label_(std::move(label)) {
  if (entries_.empty()) throw ReplayError(label_ + ": replay fixture has no entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].turn != static_cast<int>(i) + 1)
      throw ReplayError(label_ + ": replay turns must be contiguous from 1, entry " +
                        std::to_string(i) + " has turn " + std::to_string(entries_[i].turn));
    if (entries_[i].response.empty())
      throw ReplayError(label_ + ": empty response at turn " + std::to_string(entries_[i].turn));
  }
}

ScriptedReplayBackend ScriptedReplayBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReplayError("cannot open replay fixture: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ReplayError("malformed replay fixture " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw ReplayError("replay fixture must be a JSON array: " + path);
  std::vector<ReplayEntry> entries;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("turn") || !item.contains("response"))
      throw ReplayError("replay entries need turn and response fields: " + path);
    ReplayEntry e;
    e.turn = item.at("turn").get<int>();
    e.speaker_hint = item.value("speaker_hint", "");
    e.response = item.at("response").get<std::string>();
    entries.push_back(std::move(e));
  }
  return ScriptedReplayBackend(std::move(entries), "scripted:" + path);
}

std::string ScriptedReplayBackend::complete(const CompletionRequest& request) {
  request.validate();
  if (cursor_ >= entries_.size())
    throw ReplayError(label_ + ": fixture exhausted after " + std::to_string(entries_.size()) +
                      " replies");
  return entries_[cursor_++].response;
}

SeededUniformBackend::SeededUniformBackend(long long lo, long long hi, std::uint64_t seed)
    : engine_(seed), lo_(lo), hi_(hi) {
  if (hi_ < lo_) throw ConfigError("uniform backend range is empty");
}

std::string SeededUniformBackend::complete(const CompletionRequest& request) {
  request.validate();
  auto span = static_cast<std::uint64_t>(hi_ - lo_) + 1;
  long long value = lo_ + static_cast<long long>(engine_() % span);
  return std::to_string(value);
}

namespace {

HttpEndpointBackend::Transport real_transport(const HttpEndpointConfig& config) {
  return [config](const std::string& body) -> HttpResult {
    httplib::Client client(config.base_url);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    httplib::Headers headers;
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    auto res = client.Post("/chat/completions", headers, body, "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
  };
}

}  // namespace

HttpEndpointBackend::HttpEndpointBackend(HttpEndpointConfig config)
    : config_(std::move(config)),
      transport_(real_transport(config_)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (config_.base_url.empty()) throw ConfigError("http backend needs a base url");
  if (config_.model_id.empty()) throw ConfigError("http backend needs a model id");
}

HttpEndpointBackend::HttpEndpointBackend(HttpEndpointConfig config, Transport transport,
                                         Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {}

std::string HttpEndpointBackend::build_request_body(const CompletionRequest& request,
                                                    const std::string& model_id) {
  json messages = json::array();
  if (!request.system_prompt.empty())
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  for (const auto& turn : request.history) {
    // Wire roles are limited to system/user/assistant; transcript speakers
    // ride along as a "name: content" prefix in a user message.
    if (turn.role == "system" || turn.role == "user" || turn.role == "assistant") {
      messages.push_back({{"role", turn.role}, {"content", turn.content}});
    } else {
      messages.push_back({{"role", "user"}, {"content", turn.role + ": " + turn.content}});
    }
  }
  json body = {{"model", model_id},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

std::string HttpEndpointBackend::parse_completion_body(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception&) {
    return "";
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) return "";
  const auto& choice = doc["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content")) return "";
  const auto& content = choice["message"]["content"];
  return content.is_string() ? content.get<std::string>() : "";
}

std::string HttpEndpointBackend::complete(const CompletionRequest& request) {
  request.validate();
  const std::string body = build_request_body(request, config_.model_id);
  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    HttpResult result = transport_(body);
    bool transport_failed = !result.error.empty();
    bool retryable_status = result.status == 429 || result.status >= 500;
    if (!transport_failed && !retryable_status) {
      if (result.status != 200)
        throw TransportError("endpoint rejected request with status " +
                             std::to_string(result.status) + ": " + result.body);
      std::string completion = parse_completion_body(result.body);
      if (completion.empty())
        throw TurnError("endpoint returned an empty or unreadable completion");
      return completion;
    }
    last_error = transport_failed ? result.error : "status " + std::to_string(result.status);
    if (attempt < config_.retry.max_attempts)
      sleeper_(config_.retry.delay_before_retry(attempt));
  }
  throw TransportError("endpoint unreachable after " +
                       std::to_string(config_.retry.max_attempts) + " attempts: " + last_error);
}

BackendSpec BackendSpec::parse(const std::string& descriptor) {
  auto colon = descriptor.find(':');
  if (colon == std::string::npos)
    throw ConfigError("backend descriptor needs a kind prefix: " + descriptor);
  std::string kind = descriptor.substr(0, colon);
  std::string rest = descriptor.substr(colon + 1);
  BackendSpec spec;
  if (kind == "scripted") {
    if (rest.empty()) throw ConfigError("scripted backend needs a fixture path");
    spec.kind = Kind::ScriptedReplay;
    spec.fixture_path = rest;
    return spec;
  }
  if (kind == "cyclic") {
    spec.kind = Kind::FixedResponder;
    // '|' separates responses that themselves contain commas; a plain list
    // like cyclic:1,2,3 splits on commas.
    const char separator = rest.find('|') != std::string::npos ? '|' : ',';
    std::string cur;
    for (char c : rest) {
      if (c == separator) {
        spec.responses.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    spec.responses.push_back(cur);
    if (spec.responses.empty() || spec.responses[0].empty())
      throw ConfigError("cyclic backend needs at least one non-empty response");
    return spec;
  }
  if (kind == "uniform") {
    spec.kind = Kind::SeededUniform;
    std::string range = rest, seed_part;
    auto comma = rest.find(',');
    if (comma != std::string::npos) {
      range = rest.substr(0, comma);
      seed_part = rest.substr(comma + 1);
    }
    auto dash = range.find('-', 1);
    if (dash == std::string::npos)
      throw ConfigError("uniform backend needs a <lo>-<hi> range: " + descriptor);
    try {
      spec.lo = std::stoll(range.substr(0, dash));
      spec.hi = std::stoll(range.substr(dash + 1));
    } catch (const std::exception&) {
      throw ConfigError("unreadable uniform backend range: " + descriptor);
    }
    if (spec.hi < spec.lo) throw ConfigError("uniform backend range is empty: " + descriptor);
    if (!seed_part.empty()) {
      if (seed_part.rfind("seed=", 0) != 0)
        throw ConfigError("uniform backend options accept only seed=<n>: " + descriptor);
      try {
        spec.uniform_seed = std::stoull(seed_part.substr(5));
      } catch (const std::exception&) {
        throw ConfigError("unreadable uniform backend seed: " + descriptor);
      }
    }
    return spec;
  }
  if (kind == "http" || kind == "https") {
    spec.kind = Kind::HttpEndpoint;
    std::vector<std::string> parts;
    std::string cur;
    for (char c : rest) {
      if (c == ',') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);
    if (parts.empty() || parts[0].empty())
      throw ConfigError("http backend needs a base url: " + descriptor);
    spec.http.base_url = (kind == "https" ? "https:" : "http:") + parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) {
      if (parts[i].rfind("model=", 0) == 0) {
        spec.http.model_id = parts[i].substr(6);
      } else if (parts[i].rfind("key-env=", 0) == 0) {
        spec.http.api_key_env = parts[i].substr(8);
      } else {
        throw ConfigError("unknown http backend option: " + parts[i]);
      }
    }
    if (spec.http.model_id.empty())
      throw ConfigError("http backend needs model=<id>: " + descriptor);
    return spec;
  }
  throw ConfigError("unknown backend kind: " + kind);
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendSpec::Kind::HttpEndpoint:
      return std::make_unique<HttpEndpointBackend>(spec.http);
    case BackendSpec::Kind::ScriptedReplay:
      return std::make_unique<ScriptedReplayBackend>(
          ScriptedReplayBackend::from_file(spec.fixture_path));
    case BackendSpec::Kind::FixedResponder:
      return std::make_unique<FixedResponderBackend>(spec.responses);
    case BackendSpec::Kind::SeededUniform:
      return std::make_unique<SeededUniformBackend>(spec.lo, spec.hi, spec.uniform_seed);
  }
  throw ConfigError("unreachable backend kind");
}

}  // namespace discourse
