#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pairsafe::llm {

enum class Role { system, user, assistant };

struct Message {
  Role role = Role::user;
  std::string content;
};

// Agent keys used to route scripted replies and to label the request log.
namespace agent {
inline constexpr const char* responder = "responder";
inline constexpr const char* seeker = "seeker";
inline constexpr const char* judge = "judge";
inline constexpr const char* scorer = "scorer";
inline constexpr const char* extractor = "extractor";
}  // namespace agent

struct ChatRequest {
  std::vector<Message> messages;
  std::string model_id;
  double temperature = 0.7;
  int max_output_tokens = 1024;
  std::optional<std::int64_t> seed;
  // Routing metadata, not sent to remote providers.
  std::string agent;
  std::string session;
};

enum class FinishReason { stop, length, error };

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total() const { return prompt_tokens + completion_tokens; }
};

struct ChatResponse {
  std::string content;
  FinishReason finish_reason = FinishReason::stop;
  Usage usage;
};

using Embedding = std::vector<double>;

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
};

// Whitespace-separated token count; the scripted backends' notion of a token.
std::int64_t count_tokens(std::string_view text);

// Canned replies, one FIFO per (session, agent). A session named "*" serves sessions
// without their own entry; agent "scorer" falls back to the "judge" queue. A queue
// marked `loop` cycles instead of running dry.
class ScriptedBackend : public ChatBackend {
 public:
  ScriptedBackend() = default;

  // {"sessions": {"<id>|*": {"<agent>": ["reply", ...] | {"responses": [...], "loop": true}}}}
  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& script);
  static std::shared_ptr<ScriptedBackend> load(const std::filesystem::path& path);

  void push(const std::string& session, const std::string& agent, std::string reply);
  void set_loop(const std::string& session, const std::string& agent, bool loop);

  // Replies longer than max_output_tokens are cut after that many tokens and
  // reported with finish_reason = length. Throws ProviderError when exhausted.
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "scripted"; }

  std::int64_t calls() const { return calls_.load(); }
  std::size_t remaining(const std::string& session, const std::string& agent) const;

 private:
  struct Queue {
    std::vector<std::string> replies;
    std::size_t next = 0;
    bool loop = false;
  };
  struct Session {
    std::mutex mu;
    std::map<std::string, Queue> queues;
  };

  Session& session_for(const std::string& session);
  Session* find_session(const std::string& session) const;

  mutable std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::atomic<std::int64_t> calls_{0};
};

// Backend driven by a callable; used to script reactive agents in tests.
class FunctionBackend : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;
  explicit FunctionBackend(Handler handler) : handler_(std::move(handler)) {}
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "function"; }
  std::int64_t calls() const { return calls_.load(); }

 private:
  Handler handler_;
  std::atomic<std::int64_t> calls_{0};
};

// Deterministic embedder: hashed character n-grams (FNV-1a) into a fixed number of buckets.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dimension = 256, std::size_t ngram = 3)
      : dimension_(dimension), ngram_(ngram) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
  std::size_t ngram_;
};

enum class RetryOn { transport, provider };

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  std::set<RetryOn> retry_on{RetryOn::transport};
};

// Newline-delimited JSON log of every request/response pair.
class RequestLog {
 public:
  explicit RequestLog(const std::filesystem::path& path);
  void append(const nlohmann::json& record);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

nlohmann::json to_json(const ChatRequest& request);
nlohmann::json to_json(const ChatResponse& response);
std::string_view to_string(FinishReason reason);

struct GatewayOptions {
  RetryPolicy retry;
  // Cap on total tokens across all calls; a call is refused once usage reaches it.
  std::optional<std::int64_t> token_budget;
  std::shared_ptr<RequestLog> log;
};

// Entry point used by every agent. Thread-safe.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> chat, std::shared_ptr<Embedder> embedder, GatewayOptions options = {});

  // Throws TransportError, ProviderError or BudgetExceeded.
  ChatResponse complete(const ChatRequest& request);
  // Throws PreconditionError on an empty list, ProviderError on inconsistent dimensions.
  std::vector<Embedding> embed(std::span<const std::string> texts);

  std::int64_t tokens_used() const { return tokens_used_.load(); }
  const ChatBackend& backend() const { return *chat_; }

 private:
  std::shared_ptr<ChatBackend> chat_;
  std::shared_ptr<Embedder> embedder_;
  GatewayOptions options_;
  std::atomic<std::int64_t> tokens_used_{0};
};

}  // namespace pairsafe::llm
