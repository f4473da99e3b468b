#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "crowdsense/agents/policy.hpp"
#include "crowdsense/util/json.hpp"

namespace crowdsense {

/// Base class for everything the external-model transport can throw.
class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GatewayConfigError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// Connection refused, reset, TLS failure, unreadable body.
class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// Non-2xx reply from the endpoint.
class HttpStatusError : public TransportError {
 public:
  HttpStatusError(int status, const std::string& what) : TransportError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ChatMessage {
  std::string role;  // system, user, assistant or tool
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string system;
  std::vector<ChatMessage> messages;
  json tools = json::array();  // tool schemas in function-calling shape
  double temperature = 0.1;
  int max_tokens = 2048;

  void validate() const {
    for (const ChatMessage& m : messages) {
      if (m.role != "system" && m.role != "user" && m.role != "assistant" && m.role != "tool") {
        throw GatewayConfigError("chat message role '" + m.role + "' is not one of system/user/assistant/tool");
      }
    }
    if (!std::isfinite(temperature) || temperature < 0.0) throw GatewayConfigError("temperature must be finite and >= 0");
    if (max_tokens < 1) throw GatewayConfigError("max_tokens must be >= 1");
    if (!tools.is_array()) throw GatewayConfigError("tools must be a list of schemas");
  }
};

struct GatewayConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4.1-mini";
  std::string api_key_env = "CROWDSENSE_API_KEY";
  double timeout_seconds = 60.0;
  int max_retries = 2;             // transport retries in the client, parse retries in with_fallback
  double retry_backoff_seconds = 0.5;
  double requests_per_second = 2.0;
  int burst = 4;
  bool count_tokens = true;
  double temperature = 0.1;
  int max_tokens = 2048;
  std::size_t max_path_listing = 6000;  // characters of solution listing before truncation
  int max_tool_rounds = 3;

  void validate() const {
    if (max_retries < 0) throw GatewayConfigError("max_retries must be >= 0");
    if (!(timeout_seconds > 0.0)) throw GatewayConfigError("timeout must be positive");
    if (!(requests_per_second > 0.0) || burst < 1) throw GatewayConfigError("rate limit must be positive");
    if (!std::isfinite(temperature) || temperature < 0.0) throw GatewayConfigError("temperature must be >= 0");
  }

  /// The key value, or empty when the variable is unset.
  std::string api_key() const {
    const char* v = std::getenv(api_key_env.c_str());
    return v ? std::string(v) : std::string();
  }
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  int attempts = 1;
  std::vector<std::string> log;  // retry notes, already redacted
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Rough count for endpoints that do not report usage: one token per four bytes.
inline long estimate_tokens(const std::string& text) { return static_cast<long>((text.size() + 3) / 4); }

inline long estimate_tokens(const ChatRequest& r) {
  long n = estimate_tokens(r.system);
  for (const ChatMessage& m : r.messages) n += estimate_tokens(m.content) + 4;
  return n;
}

/// Replaces every occurrence of `secret` in `text`.
inline std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (std::size_t pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
    text.replace(pos, secret.size(), "[redacted]");
    pos += 10;
  }
  return text;
}

/// Classic token bucket; acquire() blocks until a token is available.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  TokenBucket(double rate_per_second, int burst)
      : rate_(rate_per_second), capacity_(std::max(1, burst)), tokens_(capacity_), last_(Clock::now()) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

  bool try_acquire() {
    std::lock_guard lock(mutex_);
    refill();
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
  }

 private:
  void refill() {
    const auto now = Clock::now();
    tokens_ = std::min<double>(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
  }

  std::mutex mutex_;
  double rate_;
  int capacity_;
  double tokens_;
  Clock::time_point last_;
};

}  // namespace crowdsense
