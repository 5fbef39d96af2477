#include "pairsafe/gateway.hpp"

#include <cctype>
#include <cmath>
#include <thread>

#include "pairsafe/dialogue.hpp"
#include "pairsafe/errors.hpp"

namespace pairsafe::llm {

using nlohmann::json;

std::int64_t count_tokens(std::string_view text) {
  std::int64_t n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

namespace {

// Byte offset just past the n-th token.
std::size_t end_of_token(std::string_view text, std::int64_t n) {
  std::int64_t seen = 0;
  bool in_token = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!space && !in_token) {
      in_token = true;
      ++seen;
    } else if (space && in_token) {
      in_token = false;
      if (seen == n) return i;
    }
  }
  return text.size();
}

std::int64_t prompt_tokens(const ChatRequest& request) {
  std::int64_t n = 0;
  for (const auto& m : request.messages) n += count_tokens(m.content);
  return n;
}

ChatResponse scripted_reply(const ChatRequest& request, std::string reply) {
  ChatResponse r;
  r.usage.prompt_tokens = prompt_tokens(request);
  const auto tokens = count_tokens(reply);
  if (tokens > request.max_output_tokens) {
    reply.resize(end_of_token(reply, request.max_output_tokens));
    r.finish_reason = FinishReason::length;
    r.usage.completion_tokens = request.max_output_tokens;
  } else {
    r.finish_reason = FinishReason::stop;
    r.usage.completion_tokens = tokens;
  }
  r.content = std::string(rtrim(reply));
  return r;
}

std::string_view role_name(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

}  // namespace

// ---------------------------------------------------------------------------
// ScriptedBackend

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& script) {
  auto backend = std::make_shared<ScriptedBackend>();
  if (!script.is_object() || !script.contains("sessions") || !script["sessions"].is_object()) {
    throw SchemaError("script must be an object with a 'sessions' object");
  }
  for (const auto& [session, agents] : script["sessions"].items()) {
    if (!agents.is_object()) throw SchemaError("script session '" + session + "' must be an object");
    for (const auto& [agent, spec] : agents.items()) {
      const json* replies = &spec;
      bool loop = false;
      if (spec.is_object()) {
        if (!spec.contains("responses")) {
          throw SchemaError("script queue " + session + "/" + agent + " lacks 'responses'");
        }
        replies = &spec["responses"];
        loop = spec.value("loop", false);
      }
      if (!replies->is_array()) throw SchemaError("script queue " + session + "/" + agent + " must be a list");
      auto& s = backend->session_for(session);
      auto& q = s.queues[agent];
      for (const auto& r : *replies) {
        // Structured replies (judge JSON, themes) may be written inline as objects.
        q.replies.push_back(r.is_string() ? r.get<std::string>() : r.dump());
      }
      q.loop = loop;
    }
  }
  return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open script file " + path.string());
  json script;
  try {
    script = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("script file " + path.string() + ": " + e.what());
  }
  return from_json(script);
}

ScriptedBackend::Session& ScriptedBackend::session_for(const std::string& session) {
  std::lock_guard lock(sessions_mu_);
  auto& slot = sessions_[session];
  if (!slot) slot = std::make_unique<Session>();
  return *slot;
}

ScriptedBackend::Session* ScriptedBackend::find_session(const std::string& session) const {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(session);
  return it == sessions_.end() ? nullptr : it->second.get();
}

void ScriptedBackend::push(const std::string& session, const std::string& agent, std::string reply) {
  auto& s = session_for(session);
  std::lock_guard lock(s.mu);
  s.queues[agent].replies.push_back(std::move(reply));
}

void ScriptedBackend::set_loop(const std::string& session, const std::string& agent, bool loop) {
  auto& s = session_for(session);
  std::lock_guard lock(s.mu);
  s.queues[agent].loop = loop;
}

std::size_t ScriptedBackend::remaining(const std::string& session, const std::string& agent) const {
  auto* s = find_session(session);
  if (!s) return 0;
  std::lock_guard lock(s->mu);
  auto it = s->queues.find(agent);
  if (it == s->queues.end()) return 0;
  return it->second.replies.size() - std::min(it->second.next, it->second.replies.size());
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  ++calls_;
  std::vector<std::string> agents{request.agent};
  if (request.agent == agent::scorer) agents.emplace_back(agent::judge);

  for (const auto& session_key : {request.session, std::string("*")}) {
    auto* s = find_session(session_key);
    if (!s) continue;
    std::lock_guard lock(s->mu);
    for (const auto& a : agents) {
      auto it = s->queues.find(a);
      if (it == s->queues.end()) continue;
      auto& q = it->second;
      if (q.replies.empty()) continue;
      if (q.next >= q.replies.size()) {
        if (!q.loop) {
          throw ProviderError("scripted queue exhausted for " + session_key + "/" + a);
        }
        q.next = 0;
      }
      return scripted_reply(request, q.replies[q.next++]);
    }
  }
  throw ProviderError("scripted queue exhausted: no replies for " + request.session + "/" + request.agent);
}

// ---------------------------------------------------------------------------
// FunctionBackend

ChatResponse FunctionBackend::complete(const ChatRequest& request) {
  ++calls_;
  return scripted_reply(request, handler_(request));
}

// ---------------------------------------------------------------------------
// HashEmbedder

std::vector<Embedding> HashEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& raw : texts) {
    std::string text;
    text.reserve(raw.size() + 2);
    text += ' ';
    for (unsigned char c : raw) text += static_cast<char>(std::tolower(c));
    text += ' ';

    Embedding v(dimension_, 0.0);
    if (text.size() >= ngram_) {
      for (std::size_t i = 0; i + ngram_ <= text.size(); ++i) {
        std::uint64_t h = 1469598103934665603ULL;
        for (std::size_t k = 0; k < ngram_; ++k) {
          h ^= static_cast<unsigned char>(text[i + k]);
          h *= 1099511628211ULL;
        }
        v[h % dimension_] += 1.0;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logging

RequestLog::RequestLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw PreconditionError("cannot open request log " + path.string());
}

void RequestLog::append(const json& record) {
  std::lock_guard lock(mu_);
  out_ << record.dump() << '\n';
  out_.flush();
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

json to_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  json j = {{"agent", request.agent},
            {"session", request.session},
            {"model", request.model_id},
            {"temperature", request.temperature},
            {"max_output_tokens", request.max_output_tokens},
            {"messages", std::move(messages)}};
  if (request.seed) j["seed"] = *request.seed;
  return j;
}

json to_json(const ChatResponse& response) {
  return {{"content", response.content},
          {"finish_reason", to_string(response.finish_reason)},
          {"usage", {{"prompt_tokens", response.usage.prompt_tokens},
                     {"completion_tokens", response.usage.completion_tokens}}}};
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<ChatBackend> chat, std::shared_ptr<Embedder> embedder, GatewayOptions options)
    : chat_(std::move(chat)), embedder_(std::move(embedder)), options_(std::move(options)) {
  if (!chat_) throw PreconditionError("gateway requires a chat backend");
  if (options_.retry.max_attempts < 1) throw PreconditionError("retry policy needs max_attempts >= 1");
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw PreconditionError("chat request has no messages");

  const auto& policy = options_.retry;
  for (int attempt = 1;; ++attempt) {
    if (options_.token_budget && tokens_used_.load() >= *options_.token_budget) {
      throw BudgetExceeded("token budget of " + std::to_string(*options_.token_budget) + " exhausted");
    }
    try {
      auto response = chat_->complete(request);
      response.content = std::string(rtrim(response.content));
      tokens_used_ += response.usage.total();
      if (options_.log) options_.log->append({{"request", to_json(request)}, {"response", to_json(response)}});
      return response;
    } catch (const TransportError& e) {
      if (options_.log) options_.log->append({{"request", to_json(request)}, {"error", e.what()}});
      if (attempt >= policy.max_attempts || !policy.retry_on.contains(RetryOn::transport)) throw;
    } catch (const ProviderError& e) {
      if (options_.log) options_.log->append({{"request", to_json(request)}, {"error", e.what()}});
      if (attempt >= policy.max_attempts || !policy.retry_on.contains(RetryOn::provider)) throw;
    }
    const auto delay = policy.backoff_base * (1LL << std::min(attempt - 1, 10));
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
  }
}

std::vector<Embedding> Gateway::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw PreconditionError("embed requires at least one text");
  if (!embedder_) throw PreconditionError("gateway has no embedding backend");

  const auto& policy = options_.retry;
  for (int attempt = 1;; ++attempt) {
    try {
      auto vectors = embedder_->embed(texts);
      if (vectors.size() != texts.size()) throw ProviderError("embedder returned the wrong number of vectors");
      for (const auto& v : vectors) {
        if (v.size() != vectors.front().size()) throw ProviderError("embedder returned mixed dimensions");
      }
      return vectors;
    } catch (const TransportError&) {
      if (attempt >= policy.max_attempts || !policy.retry_on.contains(RetryOn::transport)) throw;
    } catch (const ProviderError&) {
      if (attempt >= policy.max_attempts || !policy.retry_on.contains(RetryOn::provider)) throw;
    }
    const auto delay = policy.backoff_base * (1LL << std::min(attempt - 1, 10));
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
  }
}

}  // namespace pairsafe::llm
