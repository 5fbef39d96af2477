#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>

namespace pairsafe::rubric {

// MITI-4 global ratings, one integer in 1..5 each.
struct GlobalRatings {
  int cultivating_change_talk = 1;
  int softening_sustain_talk = 1;
  int partnership = 1;
  int empathy = 1;

  bool valid() const;
  bool operator==(const GlobalRatings&) const = default;
};

// Ratings averaged over turns or conversations; each value lies in [1, 5].
struct RatingMeans {
  double cultivating_change_talk = 1.0;
  double softening_sustain_talk = 1.0;
  double partnership = 1.0;
  double empathy = 1.0;

  RatingMeans() = default;
  RatingMeans(double cc, double ss, double p, double e)
      : cultivating_change_talk(cc), softening_sustain_talk(ss), partnership(p), empathy(e) {}
  RatingMeans(const GlobalRatings& r)  // NOLINT(google-explicit-constructor)
      : cultivating_change_talk(r.cultivating_change_talk),
        softening_sustain_talk(r.softening_sustain_talk),
        partnership(r.partnership),
        empathy(r.empathy) {}

  bool operator==(const RatingMeans&) const = default;
};

inline constexpr std::array<std::string_view, 4> kRatingKeys = {
    "cultivating_change_talk", "softening_sustain_talk", "partnership", "empathy"};

inline constexpr std::array<std::string_view, 10> kCountKeys = {
    "giving_information", "simple_reflection",  "complex_reflection", "affirm",
    "emphasize_autonomy", "seek_collaboration", "persuade",           "persuade_with_permission",
    "confront",           "question"};

// The ten behavior counts. Raw counts are integers; per-turn normalized counts are
// non-negative reals and carry normalized = true.
struct BehaviorCounts {
  double giving_information = 0;
  double simple_reflection = 0;
  double complex_reflection = 0;
  double affirm = 0;
  double emphasize_autonomy = 0;
  double seek_collaboration = 0;
  double persuade = 0;
  double persuade_with_permission = 0;
  double confront = 0;
  double question = 0;
  bool normalized = false;

  // Values in kCountKeys order.
  std::array<double, 10> values() const;
  static BehaviorCounts from_values(const std::array<double, 10>& v, bool normalized);

  // All counts >= 0, and integral unless normalized.
  bool valid() const;

  BehaviorCounts& operator+=(const BehaviorCounts& other);
  bool operator==(const BehaviorCounts&) const = default;
};

// One judge evaluation of a candidate responder turn.
struct TurnAudit {
  GlobalRatings ratings;
  BehaviorCounts counts;
  // Exactly the four kRatingKeys.
  std::map<std::string, std::string> rationales;
  int window_size = 1;

  bool operator==(const TurnAudit&) const = default;
};

struct DerivedMetrics {
  // (SR + CR) / Q; when Q == 0 the value is SR + CR and rq_degenerate is set.
  double rq_ratio = 0;
  bool rq_degenerate = false;
  // CR / (SR + CR), 0 when there are no reflections.
  double pct_complex_reflections = 0;
  double mia = 0;   // SC + AF + EA
  double mina = 0;  // P + C
  double relational = 1;  // (Partnership + Empathy) / 2
  double technical = 1;   // (Cultivating + Softening) / 2

  bool operator==(const DerivedMetrics&) const = default;
};

DerivedMetrics derive_metrics(const RatingMeans& ratings, const BehaviorCounts& counts);

struct ConversationScore {
  RatingMeans mean_ratings;
  BehaviorCounts per_turn_counts;  // normalized
  DerivedMetrics derived;
  int n_responder_turns = 0;

  bool operator==(const ConversationScore&) const = default;
};

// Means of the ratings, per-turn counts, and derived metrics from the conversation totals.
// Throws EmptyConversation on an empty sequence.
ConversationScore aggregate_conversation(std::span<const TurnAudit> audits);

// Corpus-level mean signals, e.g. one column of a validation table.
struct MeanSignals {
  RatingMeans ratings;
  BehaviorCounts counts;
};

// True iff the linear composites (MIA, MINA, Relational, Technical) computed from the
// means match `expected` within `tolerance`.
bool linearity_check(const MeanSignals& means, const DerivedMetrics& expected, double tolerance = 0.01);

}  // namespace pairsafe::rubric
