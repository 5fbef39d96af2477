#pragma once

#include <string_view>

// System prompts for the four agents, kept verbatim.
namespace pairsafe::prompts {

extern const std::string_view kResponderSystem;
extern const std::string_view kJudgeSystem;
extern const std::string_view kSeekerSystem;
extern const std::string_view kThemeExtractionSystem;

}  // namespace pairsafe::prompts
