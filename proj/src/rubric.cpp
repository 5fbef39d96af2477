#include "pairsafe/rubric.hpp"

#include <cmath>

#include "pairsafe/errors.hpp"

namespace pairsafe::rubric {

namespace {
bool in_rating_range(int v) { return v >= 1 && v <= 5; }
}  // namespace

bool GlobalRatings::valid() const {
  return in_rating_range(cultivating_change_talk) && in_rating_range(softening_sustain_talk) &&
         in_rating_range(partnership) && in_rating_range(empathy);
}

std::array<double, 10> BehaviorCounts::values() const {
  return {giving_information, simple_reflection, complex_reflection, affirm,  emphasize_autonomy,
          seek_collaboration, persuade,          persuade_with_permission,    confront, question};
}

BehaviorCounts BehaviorCounts::from_values(const std::array<double, 10>& v, bool normalized) {
  BehaviorCounts c;
  c.giving_information = v[0];
  c.simple_reflection = v[1];
  c.complex_reflection = v[2];
  c.affirm = v[3];
  c.emphasize_autonomy = v[4];
  c.seek_collaboration = v[5];
  c.persuade = v[6];
  c.persuade_with_permission = v[7];
  c.confront = v[8];
  c.question = v[9];
  c.normalized = normalized;
  return c;
}

bool BehaviorCounts::valid() const {
  for (double v : values()) {
    if (!(v >= 0) || !std::isfinite(v)) return false;
    if (!normalized && v != std::floor(v)) return false;
  }
  return true;
}

BehaviorCounts& BehaviorCounts::operator+=(const BehaviorCounts& other) {
  auto a = values();
  const auto b = other.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  *this = from_values(a, normalized);
  return *this;
}

DerivedMetrics derive_metrics(const RatingMeans& ratings, const BehaviorCounts& counts) {
  DerivedMetrics m;
  const double reflections = counts.simple_reflection + counts.complex_reflection;
  if (counts.question > 0) {
    m.rq_ratio = reflections / counts.question;
  } else {
    m.rq_ratio = reflections;
    m.rq_degenerate = true;
  }
  m.pct_complex_reflections = reflections > 0 ? counts.complex_reflection / reflections : 0.0;
  m.mia = counts.seek_collaboration + counts.affirm + counts.emphasize_autonomy;
  m.mina = counts.persuade + counts.confront;
  m.relational = (ratings.partnership + ratings.empathy) / 2.0;
  m.technical = (ratings.cultivating_change_talk + ratings.softening_sustain_talk) / 2.0;
  return m;
}

ConversationScore aggregate_conversation(std::span<const TurnAudit> audits) {
  if (audits.empty()) throw EmptyConversation("cannot aggregate a conversation with no audited turns");

  const double n = static_cast<double>(audits.size());
  RatingMeans sums{0, 0, 0, 0};
  BehaviorCounts totals;
  for (const auto& a : audits) {
    sums.cultivating_change_talk += a.ratings.cultivating_change_talk;
    sums.softening_sustain_talk += a.ratings.softening_sustain_talk;
    sums.partnership += a.ratings.partnership;
    sums.empathy += a.ratings.empathy;
    totals += a.counts;
  }

  ConversationScore score;
  score.n_responder_turns = static_cast<int>(audits.size());
  score.mean_ratings = RatingMeans{sums.cultivating_change_talk / n, sums.softening_sustain_talk / n,
                                   sums.partnership / n, sums.empathy / n};
  auto per_turn = totals.values();
  for (double& v : per_turn) v /= n;
  score.per_turn_counts = BehaviorCounts::from_values(per_turn, true);

  // Linear composites in per-turn units; the two ratios from the conversation totals.
  score.derived = derive_metrics(score.mean_ratings, score.per_turn_counts);
  const auto from_totals = derive_metrics(score.mean_ratings, totals);
  score.derived.rq_ratio = from_totals.rq_ratio;
  score.derived.rq_degenerate = from_totals.rq_degenerate;
  score.derived.pct_complex_reflections = from_totals.pct_complex_reflections;
  return score;
}

bool linearity_check(const MeanSignals& means, const DerivedMetrics& expected, double tolerance) {
  const auto got = derive_metrics(means.ratings, means.counts);
  auto close = [tolerance](double a, double b) { return std::abs(a - b) <= tolerance + 1e-12; };
  return close(got.mia, expected.mia) && close(got.mina, expected.mina) &&
         close(got.relational, expected.relational) && close(got.technical, expected.technical);
}

}  // namespace pairsafe::rubric
