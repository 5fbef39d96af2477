#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pairsafe {

enum class Speaker { seeker, responder };

std::string_view to_string(Speaker s);
Speaker speaker_from_string(std::string_view s);

// Line prefix used in transcripts and prompts: "C: " for the seeker, "T: " for the responder.
std::string_view line_prefix(Speaker s);

inline Speaker other(Speaker s) { return s == Speaker::seeker ? Speaker::responder : Speaker::seeker; }

// One dialogue turn. `text` never carries the "C: "/"T: " prefix.
struct AgentTurn {
  Speaker speaker = Speaker::seeker;
  std::string text;

  bool operator==(const AgentTurn&) const = default;
};

using Transcript = std::vector<AgentTurn>;

// "C: ..." / "T: ..." lines joined by '\n'.
std::string render_transcript(std::span<const AgentTurn> turns);

// Parses one agent output. Whitespace-only input means the agent ended the session
// (returns nullopt). Anything else must be a single line with the expected prefix.
// Throws FormatError on a wrong prefix, empty content or multiple lines.
std::optional<AgentTurn> parse_agent_turn(std::string_view text, Speaker expected);

// Trailing whitespace removal shared by the gateway and the parsers.
std::string_view rtrim(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace pairsafe
