#include "pairsafe/supervisor.hpp"

namespace pairsafe::supervisor {

namespace {

constexpr std::string_view kMina = R"TXT(Your response contains directive or confrontational elements. Revise the response to
remove advice-giving, persuasion, or argumentation. Replace these with non-directive
reflections or autonomy-supportive statements that stay aligned with the client's
perspective and evoke the client's own reasons for change.

<EXAMPLE 1>
Original:
T: You've been feeling really torn about your drinking lately. You should just commit to cutting back because it's clearly causing problems.

Revised:
T: You've been feeling really torn about your drinking lately. It sounds like part of you is noticing how it's been causing problems, am I correct?
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: You care a lot about managing your stress. If you don't start exercising regularly, things are only going to get worse.

Revised:
T: You care a lot about managing your stress. How are you feeling about the stress that has been building up for you?
</EXAMPLE 2>

The revised response must not be longer than the original and must not introduce new
recommendations, solutions, or additional sentences outside the scope of this revision.)TXT";

constexpr std::string_view kRqLow = R"TXT(Your response relies too heavily on questions and underuses other Motivational
Interviewing strategies. Revise the response by replacing at least one question with a
sentence that cultivates change talk, seeks collaboration, offers an affirmation, or
provides relevant information in a neutral, supportive way.

<EXAMPLE 1>
Original:
T: You've been feeling stuck for a while now. What do you think is holding you back from making a change?

Revised:
T: You've been feeling stuck for a while now. Together let's look at what's been making change feel so difficult.
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: You’re frustrated with how things have been going. What makes this situation especially hard for you?

Revised:
T: You’re frustrated with how things have been going. We can slow this down and try to understand what’s been weighing on you most.
</EXAMPLE 2>

The goal is to move the conversation forward without asking for new information. The
revised response must not be longer than the original and must not add new questions or
additional content beyond the required revision.)TXT";

constexpr std::string_view kMia = R"TXT(Your response does not sufficiently affirm the client, support autonomy, or convey
collaboration. Revise the response to affirm the client’s strengths, emphasize that
decisions belong to the client, and signal partnership (e.g., "we," "together,"
"at your pace") without directing or persuading.

<EXAMPLE 1>
Original:
T: It sounds like you're struggling, now it’s important to figure out what to do next.

Revised:
T: You’ve shown a lot of persistence in carrying this as long as you have, and we can take time together to consider what feels right for you moving forward.
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: It seems like you've tried several approaches already, and there are many options you could consider.

Revised:
T: The effort you’ve already put in really stands out, and we can look side by side at what direction you want to take from here.
</EXAMPLE 2>

The revised response must not be longer than the original and must not include advice,
solutions, or new questions.)TXT";

constexpr std::string_view kEmpathy = R"TXT(Your response does not sufficiently convey empathy. Revise the response to more clearly
acknowledge and reflect the client’s emotional experience using feeling-focused or
validating language.

<EXAMPLE 1>
Original:
T: You’ve been dealing with a lot lately. What do you think you should do next?

Revised:
T: It sounds exhausting to be carrying all of this at once.
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: You keep running into the same problems at work. How are you planning to handle that?

Revised:
T: It feels discouraging to put in effort and still feel stuck, right?
</EXAMPLE 2>

The revised response must not be longer than the original and must not introduce advice,
problem-solving, or additional content.)TXT";

constexpr std::string_view kPartnership = R"TXT(Your response does not sufficiently communicate partnership or collaboration. Revise
the response to emphasize shared understanding and joint exploration using language that
signals working together (e.g., "we," "together," "alongside you").

<EXAMPLE 1>
Original:
T: You’ve been feeling unsure about making this change. I think the next step should be to focus on setting clearer goals.

Revised:
T: We can take some time together to make sense of what feels most important right now.
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: You’re conflicted about what to do next. It might help if you tried approaching this differently.

Revised:
T: We can explore together what feels workable for you at this point.
</EXAMPLE 2>

The revised response must not be longer than the original and must not include advice,
directives, or new questions.)TXT";

constexpr std::string_view kCultivating = R"TXT(Your response does not sufficiently cultivate change talk. Revise the response to evoke
the client’s own motivations, values, concerns, or reasons for change using reflections,
affirmations, or open invitations that point toward change without directing it.

<EXAMPLE 1>
Original:
T: You’ve been thinking a lot about how things are going. What do you want to do about it?

Revised:
T: This seems to be bringing up questions for you about whether staying the same still fits with what you want. What do you want to do about it?
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: You’re not happy with how this is affecting your life. Have you considered making a change?

Revised:
T: It sounds like the impact on your life is making change feel more personally meaningful now. Have you considered making a change?
</EXAMPLE 2>

The revised response must not be longer than the original and must not persuade, suggest
solutions, or add new questions beyond what is necessary.)TXT";

constexpr std::string_view kSoftening = R"TXT(Your response does not sufficiently soften sustain talk. Revise the response to
acknowledge and validate the client’s hesitations or reasons for maintaining the status
quo in a non-judgmental way, while gently opening space for alternative perspectives.

<EXAMPLE 1>
Original:
T: You don’t feel ready to make any changes right now. But staying the same could keep causing problems.

Revised:
T: You don’t feel ready to make any changes right now. Are there reasons this feels hard to move away from at the moment?
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: You’re saying that changing feels overwhelming. But nothing will improve if you don’t try.

Revised:
T: Given everything you’re dealing with, it makes sense that taking a step feels like a lot right now.
</EXAMPLE 2>

The revised response must not be longer than the original and must not argue, persuade,
or introduce new content beyond what is necessary.)TXT";

constexpr std::string_view kRqHigh = R"TXT(Your response relies too heavily on reflection and would benefit from more open
questioning. Revise the response by introducing exactly one open, client-centered
question that invites exploration or clarification without directing or advising.

<EXAMPLE 1>
Original:
T: It sounds really painful to feel misunderstood by people who matter to you. You’ve been trying hard to stay true to yourself, and that effort shows how important this is to you. It seems like being seen and heard here really matters.

Revised:
T: It sounds really painful to feel misunderstood by people who matter to you. You’ve been trying hard to stay true to yourself, and that effort shows how important this is to you. What feels most important for you to be understood right now?
</EXAMPLE 1>

<EXAMPLE 2>
Original:
T: You’ve been carrying a lot of frustration around this for a long time. It reflects how deeply you care about your relationships and your own growth. That tension seems to sit with you even now.

Revised:
T: You’ve been carrying a lot of frustration around this for a long time. It reflects how deeply you care about your relationships and your own growth. Where do you notice that tension showing up most for you?
</EXAMPLE 2>

The revised response must not be longer than the original and must not add multiple
questions, advice, or solutions.)TXT";

}  // namespace

std::string_view feedback_text(CriterionId id) {
  switch (id) {
    case CriterionId::mina: return kMina;
    case CriterionId::rq_low: return kRqLow;
    case CriterionId::rq_high: return kRqHigh;
    case CriterionId::mia: return kMia;
    case CriterionId::empathy: return kEmpathy;
    case CriterionId::partnership: return kPartnership;
    case CriterionId::cultivating: return kCultivating;
    case CriterionId::softening: return kSoftening;
  }
  return kMina;
}

}  // namespace pairsafe::supervisor
