#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crowdsense/gateway/chat.hpp"

namespace crowdsense {

/// One scripted rule. `match` is a substring of the request (system prompt plus
/// messages); empty matches anything. `times` = 0 means unlimited uses.
/// `error` instead of a reply makes the mock throw: "timeout", "transport" or "status:<code>".
struct MockRule {
  std::string match;
  std::string reply;
  int times = 0;
  std::string error;
};

inline std::vector<MockRule> mock_script_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("mock script must be a list of {match, reply}");
  std::vector<MockRule> rules;
  for (const json& r : j) {
    if (!r.is_object()) throw FormatError("mock rule must be an object: " + r.dump());
    MockRule rule;
    rule.match = r.value("match", "");
    rule.reply = r.value("reply", "");
    rule.times = r.value("times", 0);
    rule.error = r.value("error", "");
    if (rule.times < 0) throw FormatError("mock rule times must be >= 0");
    rules.push_back(std::move(rule));
  }
  return rules;
}

/// Hermetic stand-in for the HTTP client; first matching rule with uses left wins.
class MockChatClient : public ChatClient {
 public:
  MockChatClient() = default;
  explicit MockChatClient(std::vector<MockRule> rules) : rules_(std::move(rules)), used_(rules_.size(), 0) {}

  void add(MockRule rule) {
    std::lock_guard lock(mutex_);
    rules_.push_back(std::move(rule));
    used_.push_back(0);
  }

  ChatResponse complete(const ChatRequest& request) override {
    request.validate();
    std::string haystack = request.system;
    for (const ChatMessage& m : request.messages) haystack += "\n" + m.content;

    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const MockRule& r = rules_[i];
      if (r.times > 0 && used_[i] >= r.times) continue;
      if (!r.match.empty() && haystack.find(r.match) == std::string::npos) continue;
      ++used_[i];
      if (r.error == "timeout") throw TimeoutError("mock: request timed out");
      if (r.error.rfind("status:", 0) == 0) {
        const int code = std::atoi(r.error.c_str() + 7);
        throw HttpStatusError(code, "mock: HTTP " + std::to_string(code));
      }
      if (!r.error.empty()) throw TransportError("mock: " + r.error);
      ChatResponse out;
      out.text = r.reply;
      out.usage = {estimate_tokens(request), estimate_tokens(r.reply)};
      return out;
    }
    throw TransportError("mock: no scripted reply matches the request");
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<MockRule> rules_;
  std::vector<int> used_;
  std::vector<ChatRequest> requests_;
};

}  // namespace crowdsense
