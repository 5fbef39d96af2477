#include <gtest/gtest.h>

#include "pairsafe/errors.hpp"
#include "pairsafe/prompts.hpp"
#include "pairsafe/responder.hpp"
#include "support.hpp"

using namespace pairsafe;
using namespace pairsafe::responder;
namespace T = pairsafe::testing;

namespace {

ResponderContext context() {
  ResponderContext c;
  c.target_behavior = "Reduce drinking";
  c.history = {{Speaker::seeker, "I drink every night."}, {Speaker::responder, "Every night."}};
  return c;
}

}  // namespace

TEST(ResponderPrompt, LayoutWithoutFeedback) {
  const auto r = build_responder_prompt(context());
  ASSERT_EQ(r.messages.size(), 2u);
  EXPECT_EQ(r.messages[0].role, llm::Role::system);
  EXPECT_EQ(r.messages[0].content, prompts::kResponderSystem);
  EXPECT_EQ(r.messages[1].content,
            "<CONVERSATION_HISTORY>\nC: I drink every night.\nT: Every night.\n</CONVERSATION_HISTORY>\n\n"
            "<TARGET_BEHAVIOR>\nReduce drinking\n</TARGET_BEHAVIOR>");
  EXPECT_EQ(r.agent, "responder");
}

TEST(ResponderPrompt, FeedbackBlockAppendedOnlyWhenPending) {
  auto c = context();
  c.pending_feedback = "Be warmer.";
  const auto r = build_responder_prompt(c);
  EXPECT_TRUE(r.messages[1].content.ends_with("</TARGET_BEHAVIOR>\n\n<MITI_FEEDBACK>\nBe warmer.\n</MITI_FEEDBACK>"));
  EXPECT_EQ(build_responder_prompt(context()).messages[1].content.find("MITI_FEEDBACK"), std::string::npos);
}

TEST(ResponderPrompt, EmptyHistoryAndMissingTarget) {
  auto c = context();
  c.history.clear();
  EXPECT_TRUE(build_responder_prompt(c).messages[1].content.starts_with(
      "<CONVERSATION_HISTORY>\n</CONVERSATION_HISTORY>"));
  c.target_behavior = " ";
  EXPECT_THROW(build_responder_prompt(c), PreconditionError);
}

TEST(Responder, ParsesTurn) {
  auto b = std::make_shared<llm::ScriptedBackend>();
  b->push("s", "responder", "T: It sounds like nights are hard.");
  auto gw = T::make_gateway(b);
  const auto t = Responder().generate_response(context(), *gw, "s");
  ASSERT_TRUE(t);
  EXPECT_EQ(t->speaker, Speaker::responder);
  EXPECT_EQ(t->text, "It sounds like nights are hard.");
}

TEST(Responder, EmptyReplyEndsSession) {
  auto b = std::make_shared<llm::ScriptedBackend>();
  b->push("s", "responder", "   ");
  auto gw = T::make_gateway(b);
  EXPECT_FALSE(Responder().generate_response(context(), *gw, "s"));
}

TEST(Responder, ResamplesMalformedOutput) {
  auto b = std::make_shared<llm::ScriptedBackend>();
  b->push("s", "responder", "C: wrong speaker");
  b->push("s", "responder", "T: one\nT: two");
  b->push("s", "responder", "T: fine");
  auto gw = T::make_gateway(b);
  EXPECT_EQ(Responder().generate_response(context(), *gw, "s")->text, "fine");
  EXPECT_EQ(b->calls(), 3);
}

TEST(Responder, GenerationFailedAfterRetries) {
  auto b = std::make_shared<llm::FunctionBackend>([](const llm::ChatRequest&) { return "no prefix"; });
  auto gw = T::make_gateway(b);
  ResponderConfig cfg;
  cfg.format_retries = 2;
  EXPECT_THROW(Responder(cfg).generate_response(context(), *gw, "s"), GenerationFailed);
  EXPECT_EQ(b->calls(), 2);
}

TEST(Responder, ConfigReachesRequest) {
  llm::ChatRequest seen;
  auto b = std::make_shared<llm::FunctionBackend>([&](const llm::ChatRequest& r) {
    seen = r;
    return "T: ok";
  });
  auto gw = T::make_gateway(b);
  ResponderConfig cfg;
  cfg.model_id = "m";
  cfg.temperature = 0.3;
  cfg.max_output_tokens = 77;
  Responder(cfg).generate_response(context(), *gw, "sess");
  EXPECT_EQ(seen.model_id, "m");
  EXPECT_EQ(seen.temperature, 0.3);
  EXPECT_EQ(seen.max_output_tokens, 77);
  EXPECT_EQ(seen.session, "sess");
}
