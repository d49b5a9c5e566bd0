#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "converse/io.hpp"
#include "converse/manager.hpp"
#include "json.hpp"

namespace converse {

inline constexpr int kProtocolVersion = 1;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  std::string path = "/chat";
  std::string log_path = "dialogues.jsonl";
  bool debug = true;  // include candidates and distributions in responses
  ManagerConfig manager;

  nlohmann::json to_json() const;
  static ServiceConfig from_json(const nlohmann::json& j, ServiceConfig base);
};

/// Session state and message handling for wire protocol v1, independent of transport.
class ChatService {
 public:
  ChatService(std::shared_ptr<const ResponseEnsemble> ensemble, std::shared_ptr<const FeatureExtractor> extractor,
              std::shared_ptr<const Policy> policy, ServiceConfig config, std::shared_ptr<DialogueLog> log,
              std::uint64_t seed);

  /// Exactly one reply per message; failures become "error" replies and leave sessions untouched.
  nlohmann::json handle(const nlohmann::json& message);
  std::string handle_text(const std::string& message);

  std::size_t active_sessions() const;
  const ServiceConfig& config() const { return config_; }

 private:
  struct Session {
    std::mutex mu;
    Dialogue dialogue;
    Rng rng;
    bool debug = true;
  };

  nlohmann::json start(const nlohmann::json& m);
  nlohmann::json user(const nlohmann::json& m);
  nlohmann::json end(const nlohmann::json& m);
  std::shared_ptr<Session> find(const std::string& id) const;

  std::shared_ptr<const ResponseEnsemble> ensemble_;
  std::shared_ptr<const FeatureExtractor> extractor_;
  std::shared_ptr<const Policy> policy_;
  ServiceConfig config_;
  std::shared_ptr<DialogueLog> log_;
  std::uint64_t seed_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 0;
};

nlohmann::json error_message(const std::string& text, const std::string& session_id = "");

/// Blocking websocket server; one thread per connection. Returns when `stop` becomes true.
void serve_websocket(ChatService& service, const std::atomic<bool>& stop);

}  // namespace converse
