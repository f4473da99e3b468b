#pragma once

#include <chrono>
#include <memory>
#include <regex>
#include <string>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>  // vendored; CPPHTTPLIB_OPENSSL_SUPPORT comes from the build when OpenSSL is present

#include "crowdsense/gateway/chat.hpp"

namespace crowdsense {

struct Endpoint {
  std::string scheme;  // http or https
  std::string host_port;
  std::string path;
};

inline Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/\s]+)(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw GatewayConfigError("endpoint must look like http(s)://host[:port]/path");
  return {m[1].str(), m[2].str(), m[3].matched ? m[3].str() : "/"};
}

/// Chat-completion request body. Tool schemas travel in function-calling form.
inline json chat_request_body(const ChatRequest& r, const std::string& model) {
  json messages = json::array();
  if (!r.system.empty()) messages.push_back({{"role", "system"}, {"content", r.system}});
  for (const ChatMessage& m : r.messages) {
    // Tool results are sent back as user turns: we run tools locally and do not track call ids.
    messages.push_back({{"role", m.role == "tool" ? "user" : m.role}, {"content", m.content}});
  }
  json body = {{"model", model}, {"messages", messages}, {"temperature", r.temperature}, {"max_tokens", r.max_tokens}};
  if (!r.tools.empty()) body["tools"] = r.tools;
  return body;
}

/// Pulls text and usage out of a chat-completion reply. A native tool call is
/// rewritten as the inline {"tool": ..., "arguments": ...} form the agents understand.
inline ChatResponse chat_response_from_body(const std::string& body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw TransportError("endpoint reply is not a JSON object");
  ChatResponse out;
  try {
    const json& msg = doc.at("choices").at(0).at("message");
    if (msg.contains("content") && msg["content"].is_string()) out.text = msg["content"].get<std::string>();
    if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
      const json& fn = msg["tool_calls"][0].at("function");
      json args = json::parse(fn.value("arguments", std::string("{}")), nullptr, false);
      if (args.is_discarded()) args = json::object();
      out.text = json{{"tool", fn.value("name", "")}, {"arguments", args}}.dump();
    }
  } catch (const json::exception&) {
    throw TransportError("endpoint reply has no choices[0].message");
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    out.usage.prompt = doc["usage"].value("prompt_tokens", 0L);
    out.usage.completion = doc["usage"].value("completion_tokens", 0L);
  }
  return out;
}

/// HTTPS chat-completion client. Thread-safe: one httplib client per call,
/// shared rate limiter. Transport failures are retried max_retries times.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(GatewayConfig config)
      : config_(std::move(config)),
        endpoint_(parse_endpoint(config_.endpoint)),
        bucket_(config_.requests_per_second, config_.burst) {
    config_.validate();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint_.scheme == "https") throw GatewayConfigError("built without OpenSSL; https endpoints unavailable");
#endif
  }

  const GatewayConfig& config() const { return config_; }

  ChatResponse complete(const ChatRequest& request) override {
    request.validate();
    const std::string key = config_.api_key();
    const std::string body = chat_request_body(request, config_.model).dump();
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    std::vector<std::string> log;
    for (int attempt = 0;; ++attempt) {
      bucket_.acquire();
      try {
        ChatResponse out = send(body, headers, key);
        if (!config_.count_tokens) out.usage = {};
        else if (out.usage.prompt == 0 && out.usage.completion == 0) {
          out.usage = {estimate_tokens(request), estimate_tokens(out.text)};
        }
        out.attempts = attempt + 1;
        out.log = std::move(log);
        return out;
      } catch (const HttpStatusError& e) {
        const bool retryable = e.status() == 429 || e.status() >= 500;
        if (!retryable || attempt >= config_.max_retries) throw;
        log.push_back(fmt::format("attempt {} failed: {}", attempt + 1, e.what()));
      } catch (const TransportError& e) {
        if (attempt >= config_.max_retries) throw;
        log.push_back(fmt::format("attempt {} failed: {}", attempt + 1, e.what()));
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(config_.retry_backoff_seconds * (1 << attempt)));
    }
  }

 private:
  ChatResponse send(const std::string& body, const httplib::Headers& headers, const std::string& key) {
    httplib::Client client(endpoint_.scheme + "://" + endpoint_.host_port);
    const auto seconds = static_cast<time_t>(config_.timeout_seconds);
    const auto micros = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    if (!res) {
      const httplib::Error err = res.error();
      const std::string what = redact(httplib::to_string(err), key);
      // httplib reports an expired read timeout as a read error.
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
        throw TimeoutError("request to " + endpoint_.host_port + " timed out or was cut off: " + what);
      }
      throw TransportError("request to " + endpoint_.host_port + " failed: " + what);
    }
    if (res->status < 200 || res->status >= 300) {
      throw HttpStatusError(res->status, fmt::format("HTTP {} from {}: {}", res->status, endpoint_.host_port,
                                                     redact(res->body.substr(0, 200), key)));
    }
    return chat_response_from_body(res->body);
  }

  GatewayConfig config_;
  Endpoint endpoint_;
  TokenBucket bucket_;
};

}  // namespace crowdsense
