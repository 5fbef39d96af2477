#include <gtest/gtest.h>

#include "pairsafe/errors.hpp"
#include "pairsafe/prompts.hpp"
#include "pairsafe/seeker.hpp"
#include "support.hpp"

using namespace pairsafe;
using namespace pairsafe::seeker;
using nlohmann::json;
namespace T = pairsafe::testing;

namespace {

const char* kThemes = R"({"key_beliefs": ["drinking helps me sleep"], "core_emotions": ["guilt"],
  "recurrent_narratives": [], "symptom_patterns": ["insomnia"], "target_behavior": "Cut down on drinking"})";

std::vector<AgentTurn> transcript() {
  return {{Speaker::seeker, "I can't sleep without a drink."}, {Speaker::responder, "Sleep is hard."}};
}

}  // namespace

TEST(Themes, Parses) {
  const auto p = parse_theme_profile(std::string("Here you go:\n") + kThemes);
  EXPECT_EQ(p.key_beliefs, std::vector<std::string>{"drinking helps me sleep"});
  EXPECT_TRUE(p.recurrent_narratives.empty());
  EXPECT_EQ(p.target_behavior, "Cut down on drinking");
  EXPECT_EQ(ThemeProfile::from_json(p.to_json()), p);
}

TEST(Themes, SchemaErrors) {
  auto j = json::parse(kThemes);
  j.erase("core_emotions");
  EXPECT_THROW(parse_theme_profile(j.dump()), SchemaError);
  j = json::parse(kThemes);
  j["symptom_patterns"] = "insomnia";
  EXPECT_THROW(parse_theme_profile(j.dump()), SchemaError);
  j = json::parse(kThemes);
  j["target_behavior"] = "  ";
  EXPECT_THROW(parse_theme_profile(j.dump()), SchemaError);
  EXPECT_THROW(parse_theme_profile("no themes"), NotParseable);
}

TEST(Themes, SeekerViewExcludesTarget) {
  const auto p = parse_theme_profile(kThemes);
  EXPECT_FALSE(p.themes_json().contains("target_behavior"));
  EXPECT_EQ(p.themes_json().size(), 4u);
}

TEST(Extraction, PromptLayout) {
  const auto r = build_extraction_prompt(transcript());
  EXPECT_EQ(r.messages[0].content, prompts::kThemeExtractionSystem);
  EXPECT_EQ(r.messages[1].content, "<TRANSCRIPT>\nC: I can't sleep without a drink.\nT: Sleep is hard.\n</TRANSCRIPT>");
  EXPECT_EQ(r.agent, "extractor");
  EXPECT_EQ(r.temperature, 0.0);
}

TEST(Extraction, RetriesThenSucceeds) {
  auto b = std::make_shared<llm::ScriptedBackend>();
  b->push("s", "extractor", "sorry");
  b->push("s", "extractor", kThemes);
  auto gw = T::make_gateway(b);
  EXPECT_EQ(SeekerSim().extract_themes(transcript(), *gw, "s").symptom_patterns[0], "insomnia");
  EXPECT_EQ(b->calls(), 2);
}

TEST(Extraction, FailsAfterRetries) {
  auto b = std::make_shared<llm::FunctionBackend>([](const llm::ChatRequest&) { return R"({"key_beliefs": []})"; });
  auto gw = T::make_gateway(b);
  EXPECT_THROW(SeekerSim().extract_themes(transcript(), *gw, "s"), ExtractionFailed);
  EXPECT_EQ(b->calls(), 3);
  EXPECT_THROW(SeekerSim().extract_themes({}, *gw, "s"), PreconditionError);
}

TEST(SeekerPrompt, ThemesOnlyAndHistory) {
  const auto p = parse_theme_profile(kThemes);
  const auto r = build_seeker_prompt(p, transcript());
  EXPECT_EQ(r.messages[0].content, prompts::kSeekerSystem);
  const auto& user = r.messages[1].content;
  EXPECT_TRUE(user.starts_with("<THEMES>\n" + p.themes_json().dump(2) + "\n</THEMES>"));
  EXPECT_TRUE(user.ends_with("<CONVERSATION_HISTORY>\nC: I can't sleep without a drink.\nT: Sleep is hard.\n"
                             "</CONVERSATION_HISTORY>"));
  EXPECT_EQ(user.find("Cut down on drinking"), std::string::npos);
  EXPECT_EQ(r.agent, "seeker");
}

TEST(SeekerTurn, ParsesAndEnds) {
  auto b = std::make_shared<llm::ScriptedBackend>();
  b->push("s", "seeker", "C: Maybe I could try.");
  b->push("s", "seeker", "");
  auto gw = T::make_gateway(b);
  const auto p = parse_theme_profile(kThemes);
  const auto t = SeekerSim().generate_seeker_turn(p, transcript(), *gw, "s");
  ASSERT_TRUE(t);
  EXPECT_EQ(t->speaker, Speaker::seeker);
  EXPECT_EQ(t->text, "Maybe I could try.");
  EXPECT_FALSE(SeekerSim().generate_seeker_turn(p, transcript(), *gw, "s"));
}

TEST(SeekerTurn, WrongSpeakerResampled) {
  auto b = std::make_shared<llm::ScriptedBackend>();
  b->push("s", "seeker", "T: I am the counselor");
  b->push("s", "seeker", "C: ok");
  auto gw = T::make_gateway(b);
  EXPECT_EQ(SeekerSim().generate_seeker_turn(parse_theme_profile(kThemes), {}, *gw, "s")->text, "ok");
}
