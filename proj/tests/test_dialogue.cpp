#include <gtest/gtest.h>

#include "pairsafe/dialogue.hpp"
#include "pairsafe/errors.hpp"

using namespace pairsafe;

TEST(Dialogue, ParsesResponderTurn) {
  auto t = parse_agent_turn("T: How are you feeling today?", Speaker::responder);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->speaker, Speaker::responder);
  EXPECT_EQ(t->text, "How are you feeling today?");
}

TEST(Dialogue, WhitespaceMeansSessionEnd) {
  EXPECT_FALSE(parse_agent_turn("", Speaker::seeker));
  EXPECT_FALSE(parse_agent_turn("  \n\t ", Speaker::responder));
}

TEST(Dialogue, RejectsWrongPrefix) {
  EXPECT_THROW(parse_agent_turn("C: hi", Speaker::responder), FormatError);
  EXPECT_THROW(parse_agent_turn("hello there", Speaker::seeker), FormatError);
}

TEST(Dialogue, RejectsMultipleLinesAndEmptyContent) {
  EXPECT_THROW(parse_agent_turn("T: one\nT: two", Speaker::responder), FormatError);
  EXPECT_THROW(parse_agent_turn("T:   ", Speaker::responder), FormatError);
}

TEST(Dialogue, SurroundingWhitespaceIsTrimmed) {
  auto t = parse_agent_turn("\n  C:   I guess so.  \n", Speaker::seeker);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->text, "I guess so.");
}

TEST(Dialogue, RenderRoundTrip) {
  Transcript turns{{Speaker::seeker, "hi"}, {Speaker::responder, "hello"}};
  EXPECT_EQ(render_transcript(turns), "C: hi\nT: hello");
  EXPECT_EQ(render_transcript({}), "");
}

TEST(Dialogue, SpeakerNames) {
  EXPECT_EQ(speaker_from_string(to_string(Speaker::seeker)), Speaker::seeker);
  EXPECT_EQ(speaker_from_string(to_string(Speaker::responder)), Speaker::responder);
  EXPECT_THROW(speaker_from_string("judge"), SchemaError);
  EXPECT_EQ(other(Speaker::seeker), Speaker::responder);
}
