#include "pairsafe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "pairsafe/errors.hpp"

namespace pairsafe::stats {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_size(std::span<const double> xs, const char* what) {
  if (xs.size() < 2) throw PreconditionError(std::string(what) + " needs at least 2 observations");
}

// Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 2000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) return kNaN;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return kNaN;
  const double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double sample_sd(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

double incomplete_beta(double a, double b, double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
  if (std::isnan(t) || !(df > 0)) return kNaN;
  if (std::isinf(t)) return 0.0;
  const double p = incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return std::clamp(p, 0.0, 1.0);
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  require_size(a, "cohens_d");
  require_size(b, "cohens_d");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = ((na - 1) * sample_variance(a) + (nb - 1) * sample_variance(b)) / (na + nb - 2);
  const double diff = mean(a) - mean(b);
  if (pooled <= 0) {
    if (diff == 0) return 0.0;
    throw DegenerateVariance("cohens_d: pooled variance is zero but the means differ");
  }
  return diff / std::sqrt(pooled);
}

std::string_view to_string(TestKind k) {
  switch (k) {
    case TestKind::paired: return "paired";
    case TestKind::welch: return "welch";
    case TestKind::student: return "student";
  }
  return "welch";
}

StatsResult t_test(std::span<const double> a, std::span<const double> b, TestKind kind) {
  require_size(a, "t_test");
  require_size(b, "t_test");

  StatsResult r;
  r.test_kind = kind;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  try {
    r.cohens_d = cohens_d(a, b);
  } catch (const DegenerateVariance&) {
    r.cohens_d.reset();
  }

  double diff = 0;
  double se = 0;
  switch (kind) {
    case TestKind::paired: {
      if (a.size() != b.size()) throw PreconditionError("paired t-test needs equal sample sizes");
      std::vector<double> d(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
      diff = mean(d);
      se = std::sqrt(sample_variance(d) / static_cast<double>(d.size()));
      r.df = static_cast<double>(d.size() - 1);
      break;
    }
    case TestKind::welch: {
      const double va = sample_variance(a) / static_cast<double>(a.size());
      const double vb = sample_variance(b) / static_cast<double>(b.size());
      diff = r.mean_a - r.mean_b;
      se = std::sqrt(va + vb);
      const double denom = va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1);
      r.df = denom > 0 ? (va + vb) * (va + vb) / denom : static_cast<double>(a.size() + b.size() - 2);
      break;
    }
    case TestKind::student: {
      const double na = static_cast<double>(a.size());
      const double nb = static_cast<double>(b.size());
      const double pooled = ((na - 1) * sample_variance(a) + (nb - 1) * sample_variance(b)) / (na + nb - 2);
      diff = r.mean_a - r.mean_b;
      se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
      r.df = na + nb - 2;
      break;
    }
  }

  if (se <= 0) {
    if (diff != 0) throw DegenerateVariance("t_test: zero spread but nonzero mean difference");
    r.t_stat = 0;
    r.p_value = 1;
    return r;
  }
  r.t_stat = diff / se;
  r.p_value = t_two_sided_p(r.t_stat, r.df);
  return r;
}

// ---------------------------------------------------------------------------
// Comparison tables

std::string_view to_string(MetricGroup g) {
  switch (g) {
    case MetricGroup::derived: return "Derived MITI Metrics";
    case MetricGroup::global_ratings: return "Primary MITI Signals - Global Ratings";
    case MetricGroup::behavior_counts: return "Primary MITI Signals - Behavior Counts";
  }
  return "";
}

const std::vector<RubricMetric>& rubric_metrics() {
  using S = rubric::ConversationScore;
  static const std::vector<RubricMetric> metrics = {
      {MetricGroup::derived, "rq_ratio", "Reflection-to-Question Ratio (R:Q)", [](const S& s) { return s.derived.rq_ratio; }},
      {MetricGroup::derived, "relational", "Relational", [](const S& s) { return s.derived.relational; }},
      {MetricGroup::derived, "technical", "Technical", [](const S& s) { return s.derived.technical; }},
      {MetricGroup::derived, "pct_complex_reflections", "Percent of Complex Reflections",
       [](const S& s) { return s.derived.pct_complex_reflections; }},
      {MetricGroup::derived, "mia", "MI-Adherent Behaviors (MIA)", [](const S& s) { return s.derived.mia; }},
      {MetricGroup::derived, "mina", "MI-Non-Adherent Behaviors (MINA)", [](const S& s) { return s.derived.mina; }},
      {MetricGroup::global_ratings, "cultivating_change_talk", "Cultivating Change",
       [](const S& s) { return s.mean_ratings.cultivating_change_talk; }},
      {MetricGroup::global_ratings, "softening_sustain_talk", "Softening Sustain",
       [](const S& s) { return s.mean_ratings.softening_sustain_talk; }},
      {MetricGroup::global_ratings, "partnership", "Partnership", [](const S& s) { return s.mean_ratings.partnership; }},
      {MetricGroup::global_ratings, "empathy", "Empathy", [](const S& s) { return s.mean_ratings.empathy; }},
      {MetricGroup::behavior_counts, "giving_information", "Giving Information",
       [](const S& s) { return s.per_turn_counts.giving_information; }},
      {MetricGroup::behavior_counts, "simple_reflection", "Simple Reflection",
       [](const S& s) { return s.per_turn_counts.simple_reflection; }},
      {MetricGroup::behavior_counts, "complex_reflection", "Complex Reflection",
       [](const S& s) { return s.per_turn_counts.complex_reflection; }},
      {MetricGroup::behavior_counts, "affirm", "Affirm", [](const S& s) { return s.per_turn_counts.affirm; }},
      {MetricGroup::behavior_counts, "emphasize_autonomy", "Emphasize Autonomy",
       [](const S& s) { return s.per_turn_counts.emphasize_autonomy; }},
      {MetricGroup::behavior_counts, "seek_collaboration", "Seek Collaboration",
       [](const S& s) { return s.per_turn_counts.seek_collaboration; }},
      {MetricGroup::behavior_counts, "persuade", "Persuade", [](const S& s) { return s.per_turn_counts.persuade; }},
      {MetricGroup::behavior_counts, "persuade_with_permission", "Persuade /w Permission",
       [](const S& s) { return s.per_turn_counts.persuade_with_permission; }},
      {MetricGroup::behavior_counts, "confront", "Confront", [](const S& s) { return s.per_turn_counts.confront; }},
      {MetricGroup::behavior_counts, "question", "Question", [](const S& s) { return s.per_turn_counts.question; }},
  };
  return metrics;
}

namespace {

ComparisonTable build_table(const std::string& label_a, std::span<const rubric::ConversationScore> a,
                            const std::string& label_b, std::span<const rubric::ConversationScore> b, TestKind kind) {
  if (a.empty() || b.empty()) throw PreconditionError("comparison needs non-empty score sets");
  ComparisonTable table;
  table.label_a = label_a;
  table.label_b = label_b;
  table.test_kind = kind;
  for (const auto& m : rubric_metrics()) {
    std::vector<double> xa;
    std::vector<double> xb;
    for (const auto& s : a) xa.push_back(m.extract(s));
    for (const auto& s : b) xb.push_back(m.extract(s));

    ComparisonRow row;
    row.group = m.group;
    row.key = m.key;
    row.display_name = m.display_name;
    row.mean_a = mean(xa);
    row.mean_b = mean(xb);
    if (xa.size() < 2 || xb.size() < 2) {
      row.note = "fewer than 2 observations";
    } else {
      try {
        row.cohens_d = cohens_d(xa, xb);
      } catch (const DegenerateVariance&) {
      }
      try {
        row.stats = t_test(xa, xb, kind);
        if (!row.stats->cohens_d) row.note = "degenerate variance (effect size undefined)";
      } catch (const DegenerateVariance&) {
        row.note = "t undefined: zero spread of the differences";
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string fixed3(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

}  // namespace

ComparisonTable compare_groups(const std::string& label_a, std::span<const rubric::ConversationScore> a,
                               const std::string& label_b, std::span<const rubric::ConversationScore> b,
                               TestKind kind) {
  return build_table(label_a, a, label_b, b, kind);
}

ComparisonTable compare_settings(std::span<const ScoredConversation> baseline,
                                 std::span<const ScoredConversation> supervised, const CompareOptions& options) {
  if (baseline.empty() || supervised.empty()) throw PreconditionError("compare_settings needs both score sets");

  std::map<std::string, const rubric::ConversationScore*> base_by_id;
  std::map<std::string, const rubric::ConversationScore*> sup_by_id;
  for (const auto& [id, s] : baseline) base_by_id[id] = &s;
  for (const auto& [id, s] : supervised) sup_by_id[id] = &s;

  std::vector<std::string> unmatched;
  for (const auto& [id, _] : base_by_id) {
    if (!sup_by_id.contains(id)) unmatched.push_back(id);
  }
  for (const auto& [id, _] : sup_by_id) {
    if (!base_by_id.contains(id)) unmatched.push_back(id);
  }
  std::sort(unmatched.begin(), unmatched.end());

  if (!unmatched.empty() && options.strict_pairing) throw PairingMismatch(unmatched);

  std::vector<rubric::ConversationScore> a;
  std::vector<rubric::ConversationScore> b;
  ComparisonTable table;
  if (unmatched.empty()) {
    for (const auto& [id, s] : sup_by_id) {
      a.push_back(*s);
      b.push_back(*base_by_id.at(id));
    }
    table = build_table("supervised", a, "baseline", b, TestKind::paired);
  } else {
    for (const auto& [id, s] : sup_by_id) a.push_back(*s);
    for (const auto& [id, s] : base_by_id) b.push_back(*s);
    table = build_table("supervised", a, "baseline", b, TestKind::welch);
    std::string msg = "pairing incomplete, fell back to Welch t-tests; unmatched ids:";
    for (const auto& id : unmatched) msg += " " + id;
    table.warnings.push_back(msg);
  }
  table.unmatched_ids = std::move(unmatched);
  return table;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "group,metric," << label_a << "_mean," << label_b << "_mean,cohens_d,t,df,p,test,n_" << label_a << ",n_"
     << label_b << ",note\n";
  for (const auto& r : rows) {
    os << to_string(r.group) << ',' << r.key << ',' << r.mean_a << ',' << r.mean_b << ',';
    if (r.stats) {
      if (r.cohens_d) os << *r.cohens_d;
      os << ',' << r.stats->t_stat << ',' << r.stats->df << ',' << r.stats->p_value << ','
         << to_string(r.stats->test_kind) << ',' << r.stats->n_a << ',' << r.stats->n_b;
    } else {
      if (r.cohens_d) os << *r.cohens_d;
      os << ",,,," << to_string(test_kind) << ",,";
    }
    os << ',' << r.note << '\n';
  }
  return os.str();
}

std::string ComparisonTable::to_report() const {
  std::ostringstream os;
  os << std::left << std::setw(40) << "Metric" << std::right << std::setw(12) << label_a << std::setw(12) << label_b
     << std::setw(12) << "Cohen's d" << std::setw(12) << "t" << "      p\n";
  std::optional<MetricGroup> current;
  for (const auto& r : rows) {
    if (current != r.group) {
      current = r.group;
      os << "-- " << to_string(r.group) << '\n';
    }
    os << std::left << std::setw(40) << r.display_name << std::right << std::setw(12) << fixed3(r.mean_a)
       << std::setw(12) << fixed3(r.mean_b);
    os << std::setw(12) << (r.cohens_d ? fixed3(*r.cohens_d) : "n/a");
    if (r.stats) {
      os << std::setw(12)
         << fixed3(r.stats->t_stat) << std::setw(9) << fixed3(r.stats->p_value) << ' '
         << significance_stars(r.stats->p_value);
    } else {
      os << std::setw(12) << "n/a" << std::setw(9) << "n/a";
    }
    if (!r.note.empty()) os << "  (" << r.note << ')';
    os << '\n';
  }
  os << "Test: " << to_string(test_kind) << " t-test; * p<0.05, ** p<0.01, *** p<0.001\n";
  for (const auto& w : warnings) os << "warning: " << w << '\n';
  return os.str();
}

}  // namespace pairsafe::stats
