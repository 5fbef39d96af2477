#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pairsafe/rubric.hpp"

namespace pairsafe::stats {

double mean(std::span<const double> xs);
// n - 1 denominator; NaN for fewer than two values.
double sample_variance(std::span<const double> xs);
double sample_sd(std::span<const double> xs);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a Student t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

// (mean_a - mean_b) / pooled sd. Two identical constant samples give 0.
// Throws PreconditionError for samples shorter than 2, DegenerateVariance when the
// pooled variance is zero and the means differ.
double cohens_d(std::span<const double> a, std::span<const double> b);

enum class TestKind { paired, welch, student };
std::string_view to_string(TestKind k);

struct StatsResult {
  double mean_a = 0;
  double mean_b = 0;
  // Absent when the pooled variance is zero and the means differ.
  std::optional<double> cohens_d;
  double t_stat = 0;
  double p_value = 1;
  double df = 0;
  TestKind test_kind = TestKind::welch;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Paired: statistic on the differences a_i - b_i (df = n - 1). Welch: unequal
// variances with Welch-Satterthwaite df. Student: pooled variance, df = n_a + n_b - 2.
// All-zero spread with equal means yields t = 0, p = 1; zero spread with different
// means throws DegenerateVariance.
StatsResult t_test(std::span<const double> a, std::span<const double> b, TestKind kind);

// ---------------------------------------------------------------------------
// Setting comparisons over conversation scores

enum class MetricGroup { derived, global_ratings, behavior_counts };
std::string_view to_string(MetricGroup g);

struct RubricMetric {
  MetricGroup group;
  std::string key;
  std::string display_name;
  double (*extract)(const rubric::ConversationScore&);
};

// Every rubric metric once, in report order.
const std::vector<RubricMetric>& rubric_metrics();

struct ComparisonRow {
  MetricGroup group = MetricGroup::derived;
  std::string key;
  std::string display_name;
  std::optional<StatsResult> stats;  // absent when the test is degenerate
  // Computed from the two samples even when the test itself is degenerate (e.g. a
  // constant paired shift); absent when the pooled variance is zero and the means differ.
  std::optional<double> cohens_d;
  double mean_a = 0;
  double mean_b = 0;
  std::string note;
};

struct ComparisonTable {
  std::string label_a;  // e.g. "supervised" or "high"
  std::string label_b;  // e.g. "baseline" or "low"
  TestKind test_kind = TestKind::paired;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> warnings;
  std::vector<std::string> unmatched_ids;

  std::string to_csv() const;
  // Grouped report with 3-decimal rounding and significance stars.
  std::string to_report() const;
};

using ScoredConversation = std::pair<std::string, rubric::ConversationScore>;

struct CompareOptions {
  // Throw PairingMismatch instead of falling back to Welch.
  bool strict_pairing = false;
};

// Supervised (a) against baseline (b), paired by source id. Falls back to Welch with a
// warning when some ids do not pair.
ComparisonTable compare_settings(std::span<const ScoredConversation> baseline,
                                 std::span<const ScoredConversation> supervised, const CompareOptions& options = {});

// Independent two-group comparison (high vs low quality), Welch by default.
ComparisonTable compare_groups(const std::string& label_a, std::span<const rubric::ConversationScore> a,
                               const std::string& label_b, std::span<const rubric::ConversationScore> b,
                               TestKind kind = TestKind::welch);

std::string significance_stars(double p);

}  // namespace pairsafe::stats
