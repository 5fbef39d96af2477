#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
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
#include "pairsafe/seeker.hpp"
#include "pairsafe/supervisor.hpp"

namespace pairsafe::orchestrator {

// ---------------------------------------------------------------------------
// Transcripts and manifests

// "C: " / "T: " lines, blank lines skipped. Throws ParseError with the 1-based line.
Transcript parse_transcript(std::string_view text);
Transcript load_transcript(const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  supervisor::Label label = supervisor::Label::unlabeled;
  std::filesystem::path path;  // resolved against the manifest directory
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;

  // Delimited text with an "id,label,path" header, or JSON {"entries": [{id,label,path}]}.
  // Throws SchemaError on duplicate ids or unresolvable paths.
  static CorpusManifest load(const std::filesystem::path& path);
  void validate() const;
};

// ---------------------------------------------------------------------------
// Sessions

enum class Mode { baseline, supervised };
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct SessionConfig {
  // Generated turns across both speakers.
  int max_turns = 20;
  int window_size = static_cast<int>(judge::kWindowTurns);
  supervisor::RevisionPolicy revision_policy{1};
  Mode mode = Mode::supervised;
  double seed_fraction = 1.0 / 3.0;
  std::uint64_t run_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SessionConfig from_json(const nlohmann::json& j);
  // Stable 16-hex-digit digest of to_json().
  std::string hash() const;
};

// ceil(fraction * n), guarded against floating-point noise.
std::size_t seed_length(std::size_t n_turns, double fraction);

// Stable per-record seed derived from the run seed and the source id.
std::uint64_t record_seed(std::uint64_t run_seed, std::string_view source_id);

struct SessionSeed {
  std::vector<AgentTurn> seed_turns;
  seeker::ThemeProfile theme_profile;
};

// Seed prefix of ceil(fraction * n) turns; themes from the full transcript.
// Throws PreconditionError for transcripts shorter than 3 turns.
SessionSeed seed_session(std::span<const AgentTurn> transcript, const seeker::SeekerSim& seeker,
                         llm::Gateway& gateway, double seed_fraction, const std::string& session = {});

enum class Termination { natural_end, turn_cap, failed };
std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct ResponderTurnTrace {
  std::size_t turn_index = 0;  // index into generated_turns
  supervisor::TurnTrace trace;
};

struct RecordScore {
  rubric::ConversationScore score;
  std::vector<rubric::TurnAudit> audits;
  std::size_t responder_turns = 0;
  std::size_t failed_audits = 0;
  double coverage = 1.0;
};

struct ConversationRecord {
  static constexpr int kSchemaVersion = 1;

  std::string source_id;
  std::uint64_t record_seed = 0;
  seeker::ThemeProfile theme_profile;
  std::vector<AgentTurn> seed_turns;
  std::vector<AgentTurn> generated_turns;
  std::vector<ResponderTurnTrace> turn_traces;
  Termination termination = Termination::natural_end;
  std::optional<std::string> error;
  SessionConfig config;
  std::optional<RecordScore> score;
  std::optional<std::string> score_error;

  // Seed prefix followed by the generated turns.
  std::vector<AgentTurn> full_conversation() const;

  nlohmann::json to_json() const;
  static ConversationRecord from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ConversationRecord load(const std::filesystem::path& path);
};

nlohmann::json to_json(const rubric::TurnAudit& audit);
rubric::TurnAudit audit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const rubric::ConversationScore& score);
rubric::ConversationScore score_from_json(const nlohmann::json& j);
nlohmann::json to_json(const supervisor::TurnTrace& trace);
supervisor::TurnTrace trace_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Running and scoring

struct Agents {
  seeker::SeekerSim seeker;
  responder::Responder responder;
  judge::Judge gate_judge;   // per-turn gating
  judge::Judge score_judge;  // post-hoc scoring
};

// Audits every responder turn in `turns` (history = context + earlier turns) and
// aggregates the successful audits. Throws EmptyConversation when nothing was audited.
RecordScore score_turns(std::span<const AgentTurn> context, std::span<const AgentTurn> turns,
                        const judge::Judge& judge, llm::Gateway& gateway, const std::string& session);

struct RunSummary {
  std::filesystem::path run_dir;
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failed_ids;
  std::map<std::string, std::size_t> terminations;
};

struct RunOptions {
  int parallel = 1;
  bool score = true;
};

class Orchestrator {
 public:
  // `profile` is required for supervised runs and ignored otherwise.
  Orchestrator(Agents agents, const supervisor::CalibrationProfile* profile);

  // Alternates seeker and responder turns after the seed prefix until an agent ends the
  // session or max_turns turns were generated. Generation/audit failures end the record
  // with termination = failed and the error kept; BudgetExceeded propagates.
  ConversationRecord run_conversation(const std::string& source_id, const SessionSeed& seed,
                                      const SessionConfig& config, llm::Gateway& gateway) const;

  // Scores the generated responder turns of the final conversation.
  RecordScore score_record(const ConversationRecord& record, llm::Gateway& gateway) const;

  // One record per manifest entry under `output_root`/<mode>-<config hash>/records.
  // Entries with a persisted record are skipped. Per-record failures are collected.
  RunSummary run_corpus(const CorpusManifest& manifest, const SessionConfig& config, llm::Gateway& gateway,
                        const std::filesystem::path& output_root, const RunOptions& options = {}) const;

  const Agents& agents() const { return agents_; }

 private:
  Agents agents_;
  const supervisor::CalibrationProfile* profile_;
};

std::filesystem::path run_directory(const std::filesystem::path& output_root, const SessionConfig& config);
std::filesystem::path record_path(const std::filesystem::path& run_dir, const std::string& source_id);

// Completed records (failed ones excluded) in source-id order.
std::vector<ConversationRecord> load_records(const std::filesystem::path& run_dir);

}  // namespace pairsafe::orchestrator
