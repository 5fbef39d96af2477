#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "pairsafe/gateway.hpp"

namespace pairsafe::llm {

// Connection settings for an OpenAI-compatible endpoint.
struct LiveConfig {
  std::string api_base;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string chat_model;
  std::string embed_model;
  std::chrono::seconds timeout{60};

  // Reads PAIRSAFE_API_BASE, PAIRSAFE_API_KEY, PAIRSAFE_CHAT_MODEL, PAIRSAFE_EMBED_MODEL.
  // Throws PreconditionError naming the first missing variable.
  static LiveConfig from_env();
};

// POST {api_base}/chat/completions. The request's model_id overrides chat_model when set.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(LiveConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "live"; }

 private:
  LiveConfig config_;
};

// POST {api_base}/embeddings.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(LiveConfig config);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  LiveConfig config_;
};

}  // namespace pairsafe::llm
