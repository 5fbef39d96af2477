#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pairsafe/dialogue.hpp"
#include "pairsafe/gateway.hpp"
#include "pairsafe/judge.hpp"
#include "pairsafe/responder.hpp"
#include "pairsafe/rubric.hpp"

namespace pairsafe::supervisor {

// The eight gated criteria; each has a revision prompt in the feedback catalog.
enum class CriterionId { mina, rq_low, rq_high, mia, empathy, partnership, cultivating, softening };

enum class Direction {
  higher_better,  // fails below the threshold
  lower_better,   // fails above the threshold
  upper_bound,    // higher is fine up to a ceiling
};

enum class Metric { mina, rq_ratio, mia, empathy, partnership, cultivating, softening };

struct CriterionSpec {
  CriterionId id;
  Direction direction;
  Metric metric;
  std::string_view name;
};

// Catalog order, which is also the feedback tie-break order.
const std::array<CriterionSpec, 8>& criteria();
const CriterionSpec& spec(CriterionId id);

std::string_view to_string(CriterionId id);
CriterionId criterion_from_string(std::string_view s);
std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

double metric_value(Metric m, const rubric::RatingMeans& ratings, const rubric::DerivedMetrics& derived);
inline bool is_count_metric(Metric m) { return m == Metric::mia || m == Metric::mina; }

// Verbatim revision prompt for a criterion, examples and closing constraint included.
std::string_view feedback_text(CriterionId id);

// Units of MIA/MINA in the calibration corpus.
enum class CountBasis {
  per_turn,          // per-turn normalized counts; no rescaling at gating time
  per_conversation,  // conversation totals; divided by mean responder turns at gating time
};

struct CriterionCalibration {
  CriterionId id = CriterionId::mina;
  Direction direction = Direction::higher_better;
  double mean_high = 0;
  double mean_low = 0;
  double sd_high = 0;
  double sd_low = 0;
  // Midpoint of the two means; for upper_bound criteria the ceiling.
  double turn_threshold = 0;
  // mean_high -/+ 2 sd_high, direction-adjusted.
  double conversation_bound = 0;
  bool enabled = true;
  bool inverted = false;
};

struct CalibrationProfile {
  static constexpr int kSchemaVersion = 1;

  std::string corpus_id;
  std::string created_at;
  CountBasis count_basis = CountBasis::per_turn;
  // Divisor applied to count-criterion thresholds when gating a single turn.
  double count_scale = 1.0;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  std::vector<CriterionCalibration> criteria;  // catalog order
  std::vector<std::string> warnings;

  const CriterionCalibration* find(CriterionId id) const;
  CriterionCalibration* find(CriterionId id);

  nlohmann::json to_json() const;
  static CalibrationProfile from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static CalibrationProfile load(const std::filesystem::path& path);
};

enum class Label { high, low, unlabeled };
std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

struct LabeledScore {
  rubric::ConversationScore score;
  Label label = Label::high;
};

struct CalibrationOptions {
  std::string corpus_id;
  CountBasis count_basis = CountBasis::per_turn;
  // Overrides the default R:Q ceiling of mean_high + 2 sd_high.
  std::optional<double> rq_high_ceiling;
};

// Midpoint turn thresholds and mean_high -/+ 2 sd_high conversation bounds (sample sd).
// Throws InsufficientData unless both labels have at least two conversations.
CalibrationProfile calibrate(std::span<const LabeledScore> scores, const CalibrationOptions& options = {});

struct Violation {
  CriterionId id = CriterionId::mina;
  double score = 0;
  double threshold = 0;
  // |score - threshold| / max(|threshold|, eps)
  double deficit = 0;
};

enum class Verdict { allow, revise };
std::string_view to_string(Verdict v);

struct Decision {
  Verdict verdict = Verdict::allow;
  std::vector<Violation> violations;  // catalog order
  std::optional<std::string> selected_feedback;
};

Decision evaluate_candidate(const rubric::TurnAudit& audit, const CalibrationProfile& profile);

// Feedback for the violation with the largest normalized deficit, ties going to the
// earlier catalog entry. Throws PreconditionError on an empty list.
std::string select_feedback(std::span<const Violation> violations);
CriterionId select_criterion(std::span<const Violation> violations);

struct RevisionPolicy {
  static constexpr int kMaxRounds = 4;
  // 0 disables the judge entirely (baseline); 1 is one revision cycle per turn.
  int max_rounds_per_turn = 1;

  void validate() const;
};

// One candidate in a turn's revision sequence and what the judge made of it.
struct RevisionStep {
  std::string candidate;
  std::optional<rubric::TurnAudit> audit;
  std::optional<Decision> decision;
  std::optional<std::string> feedback;
  std::optional<CriterionId> feedback_criterion;
};

struct TurnTrace {
  std::string mode = "baseline";  // or "supervised"
  std::string revision_context = "continued_thread";
  std::vector<RevisionStep> steps;
  // The responder returned an empty turn when asked to revise; the previous candidate was kept.
  bool revision_declined = false;
  std::optional<std::string> error;

  int audits() const;
  int revise_events() const;
  int regenerations() const;
};

// Conversation-level pass under the mean_high -/+ 2 sd_high bounds.
bool conversation_pass(const rubric::ConversationScore& score, const CalibrationProfile& profile);
std::vector<Violation> conversation_failures(const rubric::ConversationScore& score,
                                             const CalibrationProfile& profile);

class Supervisor {
 public:
  // `profile` may be null only for a baseline policy.
  Supervisor(judge::Judge judge, responder::Responder responder, const CalibrationProfile* profile,
             RevisionPolicy policy);

  // Audits the candidate and, while the verdict is Revise and rounds remain, asks the
  // responder for a revision. Returns the last candidate produced. `trace` is filled
  // progressively so it survives an AuditFailed/GenerationFailed exception.
  std::string supervise_turn(std::span<const AgentTurn> history, const std::string& target_behavior,
                             std::string candidate, llm::Gateway& gateway, const std::string& session,
                             TurnTrace& trace) const;

  const RevisionPolicy& policy() const { return policy_; }
  const judge::Judge& judge() const { return judge_; }
  const responder::Responder& responder() const { return responder_; }

 private:
  judge::Judge judge_;
  responder::Responder responder_;
  const CalibrationProfile* profile_;
  RevisionPolicy policy_;
};

}  // namespace pairsafe::supervisor
