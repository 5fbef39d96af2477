#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "pairsafe/errors.hpp"
#include "pairsafe/gateway.hpp"
#include "support.hpp"

using namespace pairsafe;
using namespace pairsafe::llm;
using nlohmann::json;
namespace T = pairsafe::testing;

namespace {

ChatRequest request(const std::string& agent, const std::string& session = "s1", int max_tokens = 1024) {
  ChatRequest r;
  r.messages = {{Role::system, "sys"}, {Role::user, "hello there"}};
  r.agent = agent;
  r.session = session;
  r.max_output_tokens = max_tokens;
  return r;
}

double brute_cosine(const Embedding& a, const Embedding& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(dot / std::sqrt(na * nb));
}

}  // namespace

TEST(Scripted, EchoesQueue) {
  auto b = std::make_shared<ScriptedBackend>();
  b->push("s1", "responder", "T: Hello");
  auto gw = T::make_gateway(b);
  const auto r = gw->complete(request("responder"));
  EXPECT_EQ(r.content, "T: Hello");
  EXPECT_EQ(r.finish_reason, FinishReason::stop);
}

TEST(Scripted, EmptyQueueIsProviderError) {
  auto b = std::make_shared<ScriptedBackend>();
  auto gw = T::make_gateway(b);
  EXPECT_THROW(gw->complete(request("responder")), ProviderError);
  b->push("s1", "responder", "T: once");
  gw->complete(request("responder"));
  EXPECT_THROW(gw->complete(request("responder")), ProviderError);
}

TEST(Scripted, TruncatesToMaxOutputTokens) {
  auto b = std::make_shared<ScriptedBackend>();
  b->push("s1", "responder", "T: a much longer reply than allowed");
  auto gw = T::make_gateway(b);
  const auto r = gw->complete(request("responder", "s1", 1));
  EXPECT_EQ(r.finish_reason, FinishReason::length);
  EXPECT_EQ(r.content, "T:");
  EXPECT_EQ(r.usage.completion_tokens, 1);
}

TEST(Scripted, DefaultSessionAndScorerFallback) {
  auto b = ScriptedBackend::from_json(json::parse(R"({"sessions": {
      "*": {"judge": ["J1", "J2"]},
      "s2": {"responder": {"responses": ["T: a", "T: b"], "loop": true}}}})"));
  auto gw = T::make_gateway(b);
  EXPECT_EQ(gw->complete(request("scorer", "anything")).content, "J1");
  EXPECT_EQ(gw->complete(request("judge", "s2")).content, "J2");
  EXPECT_EQ(gw->complete(request("responder", "s2")).content, "T: a");
  EXPECT_EQ(gw->complete(request("responder", "s2")).content, "T: b");
  EXPECT_EQ(gw->complete(request("responder", "s2")).content, "T: a");
  EXPECT_EQ(b->remaining("*", "judge"), 0u);
}

TEST(Scripted, InlineObjectsBecomeJson) {
  auto b = ScriptedBackend::from_json(json::parse(R"({"sessions": {"*": {"judge": [{"a": 1}]}}})"));
  auto gw = T::make_gateway(b);
  EXPECT_EQ(json::parse(gw->complete(request("judge")).content), json::parse(R"({"a":1})"));
}

TEST(Scripted, MalformedScriptIsSchemaError) {
  EXPECT_THROW(ScriptedBackend::from_json(json::parse(R"({"x": 1})")), SchemaError);
  EXPECT_THROW(ScriptedBackend::from_json(json::parse(R"({"sessions": {"*": {"judge": 3}}})")), SchemaError);
}

TEST(Scripted, ReplayIsDeterministic) {
  const auto script = json::parse(R"({"sessions": {"*": {"responder": ["T: one  ", "T: two"]}}})");
  std::vector<std::string> first, second;
  for (auto* out : {&first, &second}) {
    auto gw = T::make_gateway(ScriptedBackend::from_json(script));
    for (int i = 0; i < 2; ++i) out->push_back(gw->complete(request("responder")).content);
  }
  EXPECT_EQ(first, second);
  EXPECT_EQ(first[0], "T: one");
}

TEST(Gateway, BudgetZeroFailsBeforeAnyCall) {
  auto b = std::make_shared<ScriptedBackend>();
  b->push("s1", "responder", "T: hi");
  auto opts = T::no_backoff();
  opts.token_budget = 0;
  auto gw = T::make_gateway(b, opts);
  EXPECT_THROW(gw->complete(request("responder")), BudgetExceeded);
  EXPECT_EQ(b->calls(), 0);
}

TEST(Gateway, BudgetStopsOnceReached) {
  auto b = std::make_shared<FunctionBackend>([](const ChatRequest&) { return "T: four tokens here"; });
  auto opts = T::no_backoff();
  opts.token_budget = 10;  // each call: 3 prompt + 4 completion tokens
  auto gw = T::make_gateway(b, opts);
  gw->complete(request("responder"));
  EXPECT_EQ(gw->tokens_used(), 7);
  gw->complete(request("responder"));
  EXPECT_THROW(gw->complete(request("responder")), BudgetExceeded);
  EXPECT_EQ(b->calls(), 2);
}

TEST(Gateway, RetriesTransportErrors) {
  int failures = 2;
  auto b = std::make_shared<FunctionBackend>([&](const ChatRequest&) -> std::string {
    if (failures-- > 0) throw TransportError("connection reset");
    return "T: ok";
  });
  auto gw = T::make_gateway(b);
  EXPECT_EQ(gw->complete(request("responder")).content, "T: ok");
  EXPECT_EQ(b->calls(), 3);
}

TEST(Gateway, GivesUpAfterMaxAttempts) {
  auto b = std::make_shared<FunctionBackend>([](const ChatRequest&) -> std::string { throw TransportError("down"); });
  auto gw = T::make_gateway(b);
  EXPECT_THROW(gw->complete(request("responder")), TransportError);
  EXPECT_EQ(b->calls(), 3);
}

TEST(Gateway, ProviderErrorsNotRetriedByDefault) {
  auto b = std::make_shared<FunctionBackend>([](const ChatRequest&) -> std::string { throw ProviderError("bad"); });
  auto gw = T::make_gateway(b);
  EXPECT_THROW(gw->complete(request("responder")), ProviderError);
  EXPECT_EQ(b->calls(), 1);
}

TEST(Gateway, TrailingWhitespaceOnly) {
  auto b = std::make_shared<FunctionBackend>([](const ChatRequest&) { return "  T: keep  leading \n\n"; });
  auto gw = T::make_gateway(b);
  EXPECT_EQ(gw->complete(request("responder")).content, "  T: keep  leading");
}

TEST(Gateway, RejectsEmptyRequest) {
  auto gw = T::make_gateway(std::make_shared<ScriptedBackend>());
  ChatRequest r;
  EXPECT_THROW(gw->complete(r), PreconditionError);
}

TEST(Gateway, LogsEveryCall) {
  T::TempDir dir;
  auto b = std::make_shared<FunctionBackend>([](const ChatRequest&) { return "T: ok"; });
  auto opts = T::no_backoff();
  opts.log = std::make_shared<RequestLog>(dir / "log.ndjson");
  auto gw = T::make_gateway(b, opts);
  gw->complete(request("responder"));
  gw->complete(request("judge"));
  std::istringstream in(T::read_file(dir / "log.ndjson"));
  std::string line;
  std::vector<json> rows;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["request"]["agent"], "judge");
  EXPECT_EQ(rows[0]["response"]["content"], "T: ok");
}

TEST(Gateway, SessionsAreIndependentUnderConcurrency) {
  auto b = std::make_shared<ScriptedBackend>();
  constexpr int kSessions = 8;
  constexpr int kReplies = 50;
  for (int s = 0; s < kSessions; ++s) {
    for (int i = 0; i < kReplies; ++i) b->push("s" + std::to_string(s), "responder", "T: " + std::to_string(i));
  }
  auto gw = T::make_gateway(b);
  std::vector<std::vector<std::string>> got(kSessions);
  {
    std::vector<std::jthread> pool;
    for (int s = 0; s < kSessions; ++s) {
      pool.emplace_back([&, s] {
        for (int i = 0; i < kReplies; ++i) got[s].push_back(gw->complete(request("responder", "s" + std::to_string(s))).content);
      });
    }
  }
  for (int s = 0; s < kSessions; ++s) {
    ASSERT_EQ(got[s].size(), static_cast<std::size_t>(kReplies));
    for (int i = 0; i < kReplies; ++i) EXPECT_EQ(got[s][i], "T: " + std::to_string(i));
  }
}

TEST(Embedder, Deterministic) {
  auto gw = T::make_gateway(std::make_shared<ScriptedBackend>());
  std::vector<std::string> texts{"I feel stuck", "I feel stuck"};
  const auto v = gw->embed(texts);
  EXPECT_EQ(v[0], v[1]);
  EXPECT_EQ(v[0], gw->embed(std::vector<std::string>{"I feel stuck"})[0]);
}

TEST(Embedder, DistinctStringsBelowOne) {
  auto gw = T::make_gateway(std::make_shared<ScriptedBackend>());
  const auto v = gw->embed(std::vector<std::string>{"I feel stuck at work", "the weather is lovely"});
  EXPECT_EQ(v[0].size(), v[1].size());
  EXPECT_LT(brute_cosine(v[0], v[1]), 1.0);
}

TEST(Embedder, EmptyListIsPrecondition) {
  auto gw = T::make_gateway(std::make_shared<ScriptedBackend>());
  EXPECT_THROW(gw->embed(std::vector<std::string>{}), PreconditionError);
}

TEST(Tokens, WhitespaceSeparated) {
  EXPECT_EQ(count_tokens(""), 0);
  EXPECT_EQ(count_tokens("  a  b\tc\n"), 3);
}
