#include "converse/service.hpp"

#include <cmath>

#include "converse/error.hpp"

namespace converse {

nlohmann::json ServiceConfig::to_json() const {
  return {{"host", host}, {"port", port},   {"path", path},
          {"log_path", log_path}, {"debug", debug}, {"manager", manager.to_json()}};
}

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j, ServiceConfig c) {
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.path = j.value("path", c.path);
  c.log_path = j.value("log_path", c.log_path);
  c.debug = j.value("debug", c.debug);
  if (j.contains("manager")) c.manager = ManagerConfig::from_json(j.at("manager"), c.manager);
  if (c.path.empty() || c.path.front() != '/') throw InvalidArgument("service path must start with '/'");
  return c;
}

nlohmann::json error_message(const std::string& text, const std::string& session_id) {
  nlohmann::json j = {{"v", kProtocolVersion}, {"type", "error"}, {"text", text}};
  if (!session_id.empty()) j["session_id"] = session_id;
  return j;
}

ChatService::ChatService(std::shared_ptr<const ResponseEnsemble> ensemble,
                         std::shared_ptr<const FeatureExtractor> extractor, std::shared_ptr<const Policy> policy,
                         ServiceConfig config, std::shared_ptr<DialogueLog> log, std::uint64_t seed)
    : ensemble_(std::move(ensemble)),
      extractor_(std::move(extractor)),
      policy_(std::move(policy)),
      config_(std::move(config)),
      log_(std::move(log)),
      seed_(seed) {
  if (!ensemble_ || !extractor_ || !policy_) throw InvalidArgument("chat service needs ensemble, features and policy");
}

std::size_t ChatService::active_sessions() const {
  std::lock_guard<std::mutex> lock(mu_);
  return sessions_.size();
}

std::shared_ptr<ChatService::Session> ChatService::find(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw InvalidArgument("unknown session " + id);
  return it->second;
}

nlohmann::json ChatService::handle(const nlohmann::json& m) {
  const std::string sid = m.is_object() && m.contains("session_id") && m["session_id"].is_string()
                              ? m["session_id"].get<std::string>()
                              : "";
  try {
    if (!m.is_object()) throw ProtocolError("message must be a JSON object");
    if (m.contains("v") && m.at("v") != kProtocolVersion) throw ProtocolError("unsupported protocol version");
    if (!m.contains("type") || !m.at("type").is_string()) throw ProtocolError("missing message type");
    const auto type = m.at("type").get<std::string>();
    if (type == "start") return start(m);
    if (type == "user") return user(m);
    if (type == "end") return end(m);
    throw ProtocolError("unexpected message type " + type);
  } catch (const std::exception& e) {
    return error_message(e.what(), sid);
  }
}

std::string ChatService::handle_text(const std::string& text) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return error_message("malformed JSON").dump();
  }
  return handle(m).dump();
}

nlohmann::json ChatService::start(const nlohmann::json& m) {
  auto s = std::make_shared<Session>();
  s->debug = m.value("debug", config_.debug);
  std::string id;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const std::uint64_t n = next_session_++;
    s->rng = derive_rng(seed_, n);
    id = "s" + std::to_string(n) + "-" + std::to_string(derive_rng(seed_ ^ 0x5e55u, n)() % 1000000);
    s->dialogue.id = id;
    s->dialogue.policy_id = policy_->id();
    sessions_[id] = s;
  }
  return {{"v", kProtocolVersion}, {"type", "start"}, {"session_id", id}};
}

nlohmann::json ChatService::user(const nlohmann::json& m) {
  const auto sid = m.at("session_id").get<std::string>();
  if (!m.contains("text") || !m.at("text").is_string() || m.at("text").get<std::string>().empty())
    throw ProtocolError("user message needs non-empty text");
  auto s = find(sid);
  std::lock_guard<std::mutex> lock(s->mu);
  Dialogue trial = s->dialogue;
  const std::optional<double> asr =
      m.contains("asr_confidence") ? std::optional<double>(m.at("asr_confidence").get<double>()) : std::nullopt;
  trial.turns.push_back(Utterance::user(m.at("text").get<std::string>(), asr));
  Rng rng = s->rng;
  const auto r = manager_step(trial, *ensemble_, *extractor_, *policy_, config_.manager, rng);
  apply(trial, r);
  s->dialogue = std::move(trial);
  s->rng = rng;

  nlohmann::json out = {{"v", kProtocolVersion}, {"type", "response"}, {"session_id", sid}, {"text", r.response.text}};
  if (s->debug && !r.selection.empty()) {
    nlohmann::json cands = nlohmann::json::array();
    for (std::size_t i = 0; i < r.selection.candidates.size(); ++i) {
      const auto& c = r.selection.candidates[i];
      nlohmann::json row = {{"model_id", c.model_id}, {"text", c.text}, {"priority", c.priority}};
      row["score"] = i < r.scores.size() ? nlohmann::json(r.scores[i]) : nlohmann::json(nullptr);
      cands.push_back(row);
    }
    out["candidates"] = cands;
    if (r.selection.policy_distribution) out["distribution"] = *r.selection.policy_distribution;
  }
  return out;
}

nlohmann::json ChatService::end(const nlohmann::json& m) {
  const auto sid = m.at("session_id").get<std::string>();
  std::optional<double> rating;
  if (m.contains("rating") && !m.at("rating").is_null()) {
    if (!m.at("rating").is_number()) throw ProtocolError("rating must be a number");
    const double r = m.at("rating").get<double>();
    if (!std::isfinite(r) || r < 1.0 || r > 5.0) throw InvalidArgument("rating must be in [1,5]");
    rating = r;
  }
  auto s = find(sid);
  {
    std::lock_guard<std::mutex> lock(s->mu);
    s->dialogue.final_score = rating;
    if (log_ && !s->dialogue.turns.empty()) log_->append(s->dialogue);
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    sessions_.erase(sid);
  }
  nlohmann::json out = {{"v", kProtocolVersion}, {"type", "end"}, {"session_id", sid}};
  if (rating) out["rating"] = *rating;
  return out;
}

}  // namespace converse
