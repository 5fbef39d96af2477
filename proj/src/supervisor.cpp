#include "pairsafe/supervisor.hpp"

#include <cmath>
#include <fstream>

#include "pairsafe/errors.hpp"
#include "pairsafe/stats.hpp"

namespace pairsafe::supervisor {

using nlohmann::json;

namespace {

constexpr double kDeficitEpsilon = 1e-9;

constexpr std::array<CriterionSpec, 8> kCriteria = {{
    {CriterionId::mina, Direction::lower_better, Metric::mina, "MINA"},
    {CriterionId::rq_low, Direction::higher_better, Metric::rq_ratio, "R_Q"},
    {CriterionId::mia, Direction::higher_better, Metric::mia, "MIA"},
    {CriterionId::empathy, Direction::higher_better, Metric::empathy, "EMPATHY"},
    {CriterionId::partnership, Direction::higher_better, Metric::partnership, "PARTNERSHIP"},
    {CriterionId::cultivating, Direction::higher_better, Metric::cultivating, "CULTIVATING"},
    {CriterionId::softening, Direction::higher_better, Metric::softening, "SOFTENING"},
    {CriterionId::rq_high, Direction::upper_bound, Metric::rq_ratio, "R_Q_HIGH"},
}};

std::size_t catalog_index(CriterionId id) {
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (kCriteria[i].id == id) return i;
  }
  return kCriteria.size();
}

bool fails(Direction d, double score, double threshold) {
  switch (d) {
    case Direction::higher_better: return score < threshold;
    case Direction::lower_better:
    case Direction::upper_bound: return score > threshold;
  }
  return false;
}

double normalized_deficit(double score, double threshold) {
  return std::abs(score - threshold) / std::max(std::abs(threshold), kDeficitEpsilon);
}

// Checks every enabled criterion against `bound_of(criterion)`.
template <typename BoundFn>
std::vector<Violation> check(const rubric::RatingMeans& ratings, const rubric::DerivedMetrics& derived,
                             const CalibrationProfile& profile, BoundFn bound_of) {
  std::vector<Violation> out;
  for (const auto& c : kCriteria) {
    const auto* cal = profile.find(c.id);
    if (!cal || !cal->enabled) continue;
    // No questions means no over-questioning.
    if (c.id == CriterionId::rq_low && derived.rq_degenerate) continue;
    const double score = metric_value(c.metric, ratings, derived);
    const double bound = bound_of(c, *cal);
    if (fails(c.direction, score, bound)) {
      out.push_back({c.id, score, bound, normalized_deficit(score, bound)});
    }
  }
  return out;
}

}  // namespace

const std::array<CriterionSpec, 8>& criteria() { return kCriteria; }

const CriterionSpec& spec(CriterionId id) { return kCriteria[catalog_index(id)]; }

std::string_view to_string(CriterionId id) { return spec(id).name; }

CriterionId criterion_from_string(std::string_view s) {
  for (const auto& c : kCriteria) {
    if (c.name == s) return c.id;
  }
  throw SchemaError("unknown criterion '" + std::string(s) + "'");
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::higher_better: return "higher_better";
    case Direction::lower_better: return "lower_better";
    case Direction::upper_bound: return "upper_bound";
  }
  return "higher_better";
}

Direction direction_from_string(std::string_view s) {
  if (s == "higher_better") return Direction::higher_better;
  if (s == "lower_better") return Direction::lower_better;
  if (s == "upper_bound") return Direction::upper_bound;
  throw SchemaError("unknown direction '" + std::string(s) + "'");
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::high: return "high";
    case Label::low: return "low";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Label label_from_string(std::string_view s) {
  if (s == "high") return Label::high;
  if (s == "low") return Label::low;
  if (s == "unlabeled" || s.empty()) return Label::unlabeled;
  throw SchemaError("unknown label '" + std::string(s) + "'");
}

std::string_view to_string(Verdict v) { return v == Verdict::allow ? "allow" : "revise"; }

double metric_value(Metric m, const rubric::RatingMeans& ratings, const rubric::DerivedMetrics& derived) {
  switch (m) {
    case Metric::mina: return derived.mina;
    case Metric::rq_ratio: return derived.rq_ratio;
    case Metric::mia: return derived.mia;
    case Metric::empathy: return ratings.empathy;
    case Metric::partnership: return ratings.partnership;
    case Metric::cultivating: return ratings.cultivating_change_talk;
    case Metric::softening: return ratings.softening_sustain_talk;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Calibration

const CriterionCalibration* CalibrationProfile::find(CriterionId id) const {
  for (const auto& c : criteria) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

CriterionCalibration* CalibrationProfile::find(CriterionId id) {
  return const_cast<CriterionCalibration*>(std::as_const(*this).find(id));
}

CalibrationProfile calibrate(std::span<const LabeledScore> scores, const CalibrationOptions& options) {
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  double turn_sum = 0;
  for (const auto& s : scores) {
    if (s.label == Label::high) ++n_high;
    if (s.label == Label::low) ++n_low;
    turn_sum += s.score.n_responder_turns;
  }
  if (n_high < 2 || n_low < 2) {
    throw InsufficientData("calibration needs at least 2 high and 2 low conversations (got " +
                           std::to_string(n_high) + " high, " + std::to_string(n_low) + " low)");
  }

  CalibrationProfile profile;
  profile.corpus_id = options.corpus_id;
  profile.count_basis = options.count_basis;
  profile.n_high = n_high;
  profile.n_low = n_low;
  if (options.count_basis == CountBasis::per_conversation) {
    profile.count_scale = turn_sum / static_cast<double>(n_high + n_low);
  }

  for (const auto& c : kCriteria) {
    std::vector<double> high;
    std::vector<double> low;
    for (const auto& s : scores) {
      double v = metric_value(c.metric, s.score.mean_ratings, s.score.derived);
      if (is_count_metric(c.metric) && options.count_basis == CountBasis::per_conversation) {
        v *= s.score.n_responder_turns;
      }
      if (s.label == Label::high) high.push_back(v);
      if (s.label == Label::low) low.push_back(v);
    }

    CriterionCalibration cal;
    cal.id = c.id;
    cal.direction = c.direction;
    cal.mean_high = stats::mean(high);
    cal.mean_low = stats::mean(low);
    cal.sd_high = stats::sample_sd(high);
    cal.sd_low = stats::sample_sd(low);

    switch (c.direction) {
      case Direction::higher_better:
        cal.turn_threshold = (cal.mean_high + cal.mean_low) / 2.0;
        cal.conversation_bound = cal.mean_high - 2.0 * cal.sd_high;
        cal.inverted = cal.mean_high < cal.mean_low;
        break;
      case Direction::lower_better:
        cal.turn_threshold = (cal.mean_high + cal.mean_low) / 2.0;
        cal.conversation_bound = cal.mean_high + 2.0 * cal.sd_high;
        cal.inverted = cal.mean_high > cal.mean_low;
        break;
      case Direction::upper_bound:
        cal.turn_threshold = options.rq_high_ceiling.value_or(cal.mean_high + 2.0 * cal.sd_high);
        cal.conversation_bound = cal.turn_threshold;
        cal.enabled = std::isfinite(cal.turn_threshold);
        break;
    }
    if (cal.inverted) {
      profile.warnings.push_back("criterion " + std::string(c.name) +
                                 " is inverted: the high-quality mean is on the wrong side of the low-quality mean");
    }
    profile.criteria.push_back(cal);
  }
  return profile;
}

json CalibrationProfile::to_json() const {
  json crit = json::array();
  for (const auto& c : criteria) {
    crit.push_back({{"id", to_string(c.id)},
                    {"direction", to_string(c.direction)},
                    {"mean_high", c.mean_high},
                    {"mean_low", c.mean_low},
                    {"sd_high", c.sd_high},
                    {"sd_low", c.sd_low},
                    {"turn_threshold", c.turn_threshold},
                    {"conversation_bound", c.conversation_bound},
                    {"enabled", c.enabled},
                    {"inverted", c.inverted}});
  }
  return {{"schema_version", kSchemaVersion},
          {"corpus_id", corpus_id},
          {"created_at", created_at},
          {"count_basis", count_basis == CountBasis::per_turn ? "per_turn" : "per_conversation"},
          {"count_scale", count_scale},
          {"n_high", n_high},
          {"n_low", n_low},
          {"criteria", std::move(crit)},
          {"warnings", warnings}};
}

CalibrationProfile CalibrationProfile::from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw SchemaError("unsupported calibration profile version " + j.at("schema_version").dump());
    }
    CalibrationProfile p;
    p.corpus_id = j.value("corpus_id", "");
    p.created_at = j.value("created_at", "");
    p.count_basis = j.value("count_basis", "per_turn") == "per_conversation" ? CountBasis::per_conversation
                                                                            : CountBasis::per_turn;
    p.count_scale = j.value("count_scale", 1.0);
    p.n_high = j.value("n_high", std::size_t{0});
    p.n_low = j.value("n_low", std::size_t{0});
    for (const auto& c : j.at("criteria")) {
      CriterionCalibration cal;
      cal.id = criterion_from_string(c.at("id").get<std::string>());
      cal.direction = direction_from_string(c.at("direction").get<std::string>());
      cal.mean_high = c.at("mean_high").get<double>();
      cal.mean_low = c.at("mean_low").get<double>();
      cal.sd_high = c.at("sd_high").get<double>();
      cal.sd_low = c.value("sd_low", 0.0);
      cal.turn_threshold = c.at("turn_threshold").get<double>();
      cal.conversation_bound = c.at("conversation_bound").get<double>();
      cal.enabled = c.value("enabled", true);
      cal.inverted = c.value("inverted", false);
      p.criteria.push_back(cal);
    }
    p.warnings = j.value("warnings", std::vector<std::string>{});
    if (!(p.count_scale > 0)) throw SchemaError("calibration profile count_scale must be positive");
    return p;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed calibration profile: ") + e.what());
  }
}

void CalibrationProfile::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw PreconditionError("cannot write calibration profile " + path.string());
  out << to_json().dump(2) << '\n';
}

CalibrationProfile CalibrationProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open calibration profile " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("calibration profile " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Gating

Decision evaluate_candidate(const rubric::TurnAudit& audit, const CalibrationProfile& profile) {
  const rubric::RatingMeans ratings(audit.ratings);
  const auto derived = rubric::derive_metrics(ratings, audit.counts);

  Decision d;
  d.violations = check(ratings, derived, profile, [&](const CriterionSpec& c, const CriterionCalibration& cal) {
    return is_count_metric(c.metric) ? cal.turn_threshold / profile.count_scale : cal.turn_threshold;
  });
  if (!d.violations.empty()) {
    d.verdict = Verdict::revise;
    d.selected_feedback = select_feedback(d.violations);
  }
  return d;
}

CriterionId select_criterion(std::span<const Violation> violations) {
  if (violations.empty()) throw PreconditionError("select_feedback needs at least one violation");
  const Violation* best = nullptr;
  for (const auto& v : violations) {
    if (!best || v.deficit > best->deficit ||
        (v.deficit == best->deficit && catalog_index(v.id) < catalog_index(best->id))) {
      best = &v;
    }
  }
  return best->id;
}

std::string select_feedback(std::span<const Violation> violations) {
  return std::string(feedback_text(select_criterion(violations)));
}

bool conversation_pass(const rubric::ConversationScore& score, const CalibrationProfile& profile) {
  return conversation_failures(score, profile).empty();
}

std::vector<Violation> conversation_failures(const rubric::ConversationScore& score,
                                             const CalibrationProfile& profile) {
  return check(score.mean_ratings, score.derived, profile, [&](const CriterionSpec& c, const CriterionCalibration& cal) {
    // Per-conversation count bounds are compared against per-turn normalized scores.
    return is_count_metric(c.metric) ? cal.conversation_bound / profile.count_scale : cal.conversation_bound;
  });
}

// ---------------------------------------------------------------------------
// Revision loop

void RevisionPolicy::validate() const {
  if (max_rounds_per_turn < 0 || max_rounds_per_turn > kMaxRounds) {
    throw PreconditionError("max_rounds_per_turn must be in 0.." + std::to_string(kMaxRounds));
  }
}

int TurnTrace::audits() const {
  int n = 0;
  for (const auto& s : steps) n += s.audit.has_value();
  return n;
}

int TurnTrace::revise_events() const {
  int n = 0;
  for (const auto& s : steps) n += s.decision && s.decision->verdict == Verdict::revise;
  return n;
}

int TurnTrace::regenerations() const { return steps.empty() ? 0 : static_cast<int>(steps.size()) - 1; }

Supervisor::Supervisor(judge::Judge judge, responder::Responder responder, const CalibrationProfile* profile,
                       RevisionPolicy policy)
    : judge_(std::move(judge)), responder_(std::move(responder)), profile_(profile), policy_(policy) {
  policy_.validate();
  if (policy_.max_rounds_per_turn > 0 && !profile_) {
    throw PreconditionError("supervised mode requires a calibration profile");
  }
}

std::string Supervisor::supervise_turn(std::span<const AgentTurn> history, const std::string& target_behavior,
                                       std::string candidate, llm::Gateway& gateway, const std::string& session,
                                       TurnTrace& trace) const {
  trace = TurnTrace{};
  trace.mode = policy_.max_rounds_per_turn == 0 ? "baseline" : "supervised";
  trace.steps.emplace_back().candidate = candidate;
  if (policy_.max_rounds_per_turn == 0) return candidate;

  for (int round = 0;; ++round) {
    auto& step = trace.steps.back();
    step.audit = judge_.audit_turn(history, candidate, gateway, session);
    step.decision = evaluate_candidate(*step.audit, *profile_);
    if (step.decision->verdict == Verdict::allow || round >= policy_.max_rounds_per_turn) return candidate;

    step.feedback = step.decision->selected_feedback;
    step.feedback_criterion = select_criterion(step.decision->violations);

    responder::ResponderContext ctx;
    ctx.target_behavior = target_behavior;
    ctx.history.assign(history.begin(), history.end());
    ctx.history.push_back(AgentTurn{Speaker::responder, candidate});
    ctx.pending_feedback = step.feedback;

    auto revised = responder_.generate_response(ctx, gateway, session);
    if (!revised) {
      trace.revision_declined = true;
      return candidate;
    }
    candidate = revised->text;
    trace.steps.emplace_back().candidate = candidate;
  }
}

}  // namespace pairsafe::supervisor
