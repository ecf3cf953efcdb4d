// SPDX-License-Identifier: Apache-2.0
//
// Local chat-completion server for client tests.
#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "psdeob/llm_client.hpp"

namespace httplib {
class Server;
}

namespace psdeob::testing {

struct StubReply {
  int status = 200;
  std::string body;
};

/// OpenAI-style envelope around `content`.
std::string chat_envelope(const std::string& content);

class StubLlm {
 public:
  /// `handler` gets the request body and the 0-based request number.
  explicit StubLlm(std::function<StubReply(const std::string& body, std::size_t n)> handler);
  ~StubLlm();
  StubLlm(const StubLlm&) = delete;
  StubLlm& operator=(const StubLlm&) = delete;

  /// Answers every request with `content` wrapped in a chat envelope.
  static std::function<StubReply(const std::string&, std::size_t)> always(std::string content);

  int port() const { return port_; }
  LlmConfig config() const;
  std::vector<std::string> bodies() const;
  std::size_t hits() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::function<StubReply(const std::string&, std::size_t)> handler_;
  mutable std::mutex mu_;
  std::vector<std::string> bodies_;
};

}  // namespace psdeob::testing
