#include "pairsafe/http_backend.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "pairsafe/errors.hpp"

namespace pairsafe::llm {

using nlohmann::json;

namespace {

std::string require_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) throw PreconditionError(std::string("environment variable ") + name + " is not set");
  return v;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base(const std::string& base) {
  auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) throw PreconditionError("api base must include a scheme: " + base);
  auto path_start = base.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = base.substr(0, path_start);
  e.prefix = path_start == std::string::npos ? "" : base.substr(path_start);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

json post_json(const LiveConfig& config, const std::string& route, const json& body) {
  const auto endpoint = split_base(config.api_base);
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);
  client.set_write_timeout(config.timeout);
  client.set_bearer_token_auth(config.api_key);

  auto result = client.Post(endpoint.prefix + route, body.dump(), "application/json");
  if (!result) {
    throw TransportError("request to " + config.api_base + route + " failed: " + httplib::to_string(result.error()));
  }
  if (result->status == 429 || result->status >= 500) {
    throw TransportError("HTTP " + std::to_string(result->status) + " from " + route + ": " + result->body);
  }
  if (result->status != 200) {
    throw ProviderError("HTTP " + std::to_string(result->status) + " from " + route + ": " + result->body);
  }
  try {
    return json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw ProviderError(std::string("malformed provider response: ") + e.what());
  }
}

}  // namespace

LiveConfig LiveConfig::from_env() {
  LiveConfig c;
  c.api_base = require_env("PAIRSAFE_API_BASE");
  c.api_key = require_env("PAIRSAFE_API_KEY");
  c.chat_model = require_env("PAIRSAFE_CHAT_MODEL");
  c.embed_model = require_env("PAIRSAFE_EMBED_MODEL");
  return c;
}

HttpChatBackend::HttpChatBackend(LiveConfig config) : config_(std::move(config)) {}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  json body = to_json(request);
  body.erase("agent");
  body.erase("session");
  body.erase("max_output_tokens");
  body["model"] = request.model_id.empty() ? config_.chat_model : request.model_id;
  body["max_tokens"] = request.max_output_tokens;

  const json reply = post_json(config_, "/chat/completions", body);
  try {
    if (reply.contains("error")) throw ProviderError("provider error: " + reply["error"].dump());
    const auto& choice = reply.at("choices").at(0);
    ChatResponse r;
    const auto& content = choice.at("message").at("content");
    r.content = content.is_string() ? content.get<std::string>() : std::string{};
    const auto reason = choice.value("finish_reason", std::string("stop"));
    r.finish_reason = reason == "stop" ? FinishReason::stop
                      : reason == "length" ? FinishReason::length
                                           : FinishReason::error;
    if (reply.contains("usage")) {
      r.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
      r.usage.completion_tokens = reply["usage"].value("completion_tokens", 0);
    }
    return r;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected chat completion shape: ") + e.what());
  }
}

HttpEmbedder::HttpEmbedder(LiveConfig config) : config_(std::move(config)) {}

std::vector<Embedding> HttpEmbedder::embed(std::span<const std::string> texts) {
  json body = {{"model", config_.embed_model}, {"input", json(std::vector<std::string>(texts.begin(), texts.end()))}};
  const json reply = post_json(config_, "/embeddings", body);
  try {
    std::vector<Embedding> out(texts.size());
    for (const auto& item : reply.at("data")) {
      const auto index = item.value("index", std::size_t{0});
      if (index >= out.size()) throw ProviderError("embedding index out of range");
      out[index] = item.at("embedding").get<Embedding>();
    }
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected embedding response shape: ") + e.what());
  }
}

}  // namespace pairsafe::llm
