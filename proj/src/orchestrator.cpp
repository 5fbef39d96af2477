#include "pairsafe/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pairsafe/errors.hpp"

namespace pairsafe::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Write-then-rename so a crash never leaves a half-written record behind.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PreconditionError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw PreconditionError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool valid_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

json turns_to_json(std::span<const AgentTurn> turns) {
  json arr = json::array();
  for (const auto& t : turns) arr.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
  return arr;
}

std::vector<AgentTurn> turns_from_json(const json& j) {
  std::vector<AgentTurn> out;
  for (const auto& t : j) out.push_back({speaker_from_string(t.at("speaker").get<std::string>()),
                                         t.at("text").get<std::string>()});
  return out;
}

json decision_to_json(const supervisor::Decision& d) {
  json v = json::array();
  for (const auto& x : d.violations) {
    v.push_back({{"criterion", supervisor::to_string(x.id)},
                 {"score", x.score},
                 {"threshold", x.threshold},
                 {"deficit", x.deficit}});
  }
  json j = {{"verdict", supervisor::to_string(d.verdict)}, {"violations", std::move(v)}};
  j["selected_feedback"] = d.selected_feedback ? json(*d.selected_feedback) : json(nullptr);
  return j;
}

supervisor::Decision decision_from_json(const json& j) {
  supervisor::Decision d;
  d.verdict = j.at("verdict").get<std::string>() == "revise" ? supervisor::Verdict::revise
                                                              : supervisor::Verdict::allow;
  for (const auto& x : j.at("violations")) {
    d.violations.push_back({supervisor::criterion_from_string(x.at("criterion").get<std::string>()),
                            x.at("score").get<double>(), x.at("threshold").get<double>(),
                            x.at("deficit").get<double>()});
  }
  if (auto it = j.find("selected_feedback"); it != j.end() && !it->is_null()) d.selected_feedback = it->get<std::string>();
  return d;
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Transcripts and manifests

Transcript parse_transcript(std::string_view text) {
  Transcript out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    Speaker who;
    if (line.starts_with("C:")) {
      who = Speaker::seeker;
    } else if (line.starts_with("T:")) {
      who = Speaker::responder;
    } else {
      throw ParseError(line_no, "expected a line starting with \"C: \" or \"T: \"");
    }
    auto content = trim(line.substr(2));
    if (content.empty()) throw ParseError(line_no, "turn has no text");
    out.push_back({who, std::string(content)});
  }
  return out;
}

Transcript load_transcript(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw PreconditionError("transcript not found: " + path.string());
  return parse_transcript(read_file(path));
}

CorpusManifest CorpusManifest::load(const fs::path& path) {
  const std::string text = read_file(path);
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };

  CorpusManifest m;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    json j;
    try {
      j = json::parse(text);
      const json& entries = j.is_array() ? j : j.at("entries");
      for (const auto& e : entries) {
        m.entries.push_back({e.at("id").get<std::string>(),
                             supervisor::label_from_string(e.value("label", "unlabeled")),
                             resolve(e.at("path").get<std::string>())});
      }
    } catch (const json::exception& e) {
      throw SchemaError("manifest " + path.string() + ": " + e.what());
    }
  } else {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    char delim = ',';
    std::size_t line_no = 0;
    int col_id = -1, col_label = -1, col_path = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty() || trim(line).front() == '#') continue;
      if (header.empty()) {
        if (line.find('\t') != std::string::npos) delim = '\t';
        header = split_line(line, delim);
        for (int i = 0; i < static_cast<int>(header.size()); ++i) {
          if (header[i] == "id") col_id = i;
          if (header[i] == "label") col_label = i;
          if (header[i] == "path") col_path = i;
        }
        if (col_id < 0 || col_path < 0) throw SchemaError("manifest header must name columns id and path");
        continue;
      }
      auto cells = split_line(line, delim);
      if (cells.size() != header.size()) {
        throw SchemaError("manifest line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " columns");
      }
      ManifestEntry e;
      e.id = cells[col_id];
      e.label = col_label < 0 ? supervisor::Label::unlabeled : supervisor::label_from_string(cells[col_label]);
      e.path = resolve(cells[col_path]);
      m.entries.push_back(std::move(e));
    }
  }
  m.validate();
  return m;
}

void CorpusManifest::validate() const {
  if (entries.empty()) throw SchemaError("manifest has no entries");
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!valid_id(e.id)) throw SchemaError("manifest id '" + e.id + "' must use letters, digits, '.', '-', '_'");
    if (!seen.insert(e.id).second) throw SchemaError("duplicate manifest id '" + e.id + "'");
    if (!fs::is_regular_file(e.path)) {
      throw SchemaError("manifest entry '" + e.id + "': transcript not found at " + e.path.string());
    }
  }
}

// ---------------------------------------------------------------------------
// Sessions

std::string_view to_string(Mode m) { return m == Mode::baseline ? "baseline" : "supervised"; }

Mode mode_from_string(std::string_view s) {
  if (s == "baseline") return Mode::baseline;
  if (s == "supervised") return Mode::supervised;
  throw PreconditionError("unknown mode '" + std::string(s) + "' (expected baseline or supervised)");
}

void SessionConfig::validate() const {
  if (max_turns < 2) throw PreconditionError("max_turns must be at least 2");
  if (window_size != static_cast<int>(judge::kWindowTurns)) throw PreconditionError("window_size is fixed at 4");
  if (!(seed_fraction > 0.0 && seed_fraction < 1.0)) throw PreconditionError("seed_fraction must lie in (0, 1)");
  revision_policy.validate();
}

json SessionConfig::to_json() const {
  return {{"max_turns", max_turns},
          {"window_size", window_size},
          {"max_rounds_per_turn", revision_policy.max_rounds_per_turn},
          {"mode", to_string(mode)},
          {"seed_fraction", seed_fraction},
          {"run_seed", run_seed}};
}

SessionConfig SessionConfig::from_json(const json& j) {
  SessionConfig c;
  c.max_turns = j.at("max_turns").get<int>();
  c.window_size = j.at("window_size").get<int>();
  c.revision_policy.max_rounds_per_turn = j.at("max_rounds_per_turn").get<int>();
  c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.seed_fraction = j.at("seed_fraction").get<double>();
  c.run_seed = j.at("run_seed").get<std::uint64_t>();
  return c;
}

std::string SessionConfig::hash() const { return hex16(fnv1a(to_json().dump())); }

std::size_t seed_length(std::size_t n_turns, double fraction) {
  const double raw = fraction * static_cast<double>(n_turns);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(std::max<std::size_t>(k, 1), n_turns);
}

std::uint64_t record_seed(std::uint64_t run_seed, std::string_view source_id) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((run_seed >> (8 * i)) & 0xff);
  return fnv1a(source_id, fnv1a(std::string_view(bytes, 8)));
}

SessionSeed seed_session(std::span<const AgentTurn> transcript, const seeker::SeekerSim& seeker,
                         llm::Gateway& gateway, double seed_fraction, const std::string& session) {
  if (transcript.size() < 3) throw PreconditionError("seeding needs a transcript of at least 3 turns");
  if (!(seed_fraction > 0.0 && seed_fraction < 1.0)) throw PreconditionError("seed_fraction must lie in (0, 1)");
  SessionSeed s;
  const auto k = seed_length(transcript.size(), seed_fraction);
  s.seed_turns.assign(transcript.begin(), transcript.begin() + static_cast<std::ptrdiff_t>(k));
  s.theme_profile = seeker.extract_themes(transcript, gateway, session);
  return s;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::natural_end: return "natural_end";
    case Termination::turn_cap: return "turn_cap";
    case Termination::failed: return "failed";
  }
  return "failed";
}

Termination termination_from_string(std::string_view s) {
  if (s == "natural_end") return Termination::natural_end;
  if (s == "turn_cap") return Termination::turn_cap;
  if (s == "failed") return Termination::failed;
  throw SchemaError("unknown termination '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Record serialization

json to_json(const rubric::TurnAudit& audit) {
  json j = judge::serialize_audit(audit);
  j["window_size"] = audit.window_size;
  return j;
}

rubric::TurnAudit audit_from_json(const json& j) {
  return judge::parse_judge_output(j.dump(), j.value("window_size", 1));
}

json to_json(const rubric::ConversationScore& s) {
  json ratings = json::object();
  const std::array<double, 4> r = {s.mean_ratings.cultivating_change_talk, s.mean_ratings.softening_sustain_talk,
                                   s.mean_ratings.partnership, s.mean_ratings.empathy};
  for (std::size_t i = 0; i < r.size(); ++i) ratings[std::string(rubric::kRatingKeys[i])] = r[i];
  json counts = json::object();
  const auto v = s.per_turn_counts.values();
  for (std::size_t i = 0; i < v.size(); ++i) counts[std::string(rubric::kCountKeys[i])] = v[i];
  const auto& d = s.derived;
  return {{"mean_ratings", std::move(ratings)},
          {"per_turn_counts", std::move(counts)},
          {"derived",
           {{"rq_ratio", d.rq_ratio},
            {"rq_degenerate", d.rq_degenerate},
            {"pct_complex_reflections", d.pct_complex_reflections},
            {"mia", d.mia},
            {"mina", d.mina},
            {"relational", d.relational},
            {"technical", d.technical}}},
          {"n_responder_turns", s.n_responder_turns}};
}

rubric::ConversationScore score_from_json(const json& j) {
  rubric::ConversationScore s;
  const auto& r = j.at("mean_ratings");
  s.mean_ratings = {r.at("cultivating_change_talk").get<double>(), r.at("softening_sustain_talk").get<double>(),
                    r.at("partnership").get<double>(), r.at("empathy").get<double>()};
  std::array<double, 10> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = j.at("per_turn_counts").at(std::string(rubric::kCountKeys[i])).get<double>();
  s.per_turn_counts = rubric::BehaviorCounts::from_values(v, true);
  const auto& d = j.at("derived");
  s.derived.rq_ratio = d.at("rq_ratio").get<double>();
  s.derived.rq_degenerate = d.at("rq_degenerate").get<bool>();
  s.derived.pct_complex_reflections = d.at("pct_complex_reflections").get<double>();
  s.derived.mia = d.at("mia").get<double>();
  s.derived.mina = d.at("mina").get<double>();
  s.derived.relational = d.at("relational").get<double>();
  s.derived.technical = d.at("technical").get<double>();
  s.n_responder_turns = j.at("n_responder_turns").get<int>();
  return s;
}

json to_json(const supervisor::TurnTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json step = {{"candidate", s.candidate}};
    step["audit"] = s.audit ? to_json(*s.audit) : json(nullptr);
    step["decision"] = s.decision ? decision_to_json(*s.decision) : json(nullptr);
    step["feedback"] = opt(s.feedback);
    step["feedback_criterion"] =
        s.feedback_criterion ? json(supervisor::to_string(*s.feedback_criterion)) : json(nullptr);
    steps.push_back(std::move(step));
  }
  return {{"mode", trace.mode},
          {"revision_context", trace.revision_context},
          {"steps", std::move(steps)},
          {"audits", trace.audits()},
          {"revise_events", trace.revise_events()},
          {"regenerations", trace.regenerations()},
          {"revision_declined", trace.revision_declined},
          {"error", opt(trace.error)}};
}

supervisor::TurnTrace trace_from_json(const json& j) {
  supervisor::TurnTrace t;
  t.mode = j.at("mode").get<std::string>();
  t.revision_context = j.at("revision_context").get<std::string>();
  for (const auto& s : j.at("steps")) {
    supervisor::RevisionStep step;
    step.candidate = s.at("candidate").get<std::string>();
    if (!s.at("audit").is_null()) step.audit = audit_from_json(s.at("audit"));
    if (!s.at("decision").is_null()) step.decision = decision_from_json(s.at("decision"));
    if (!s.at("feedback").is_null()) step.feedback = s.at("feedback").get<std::string>();
    if (!s.at("feedback_criterion").is_null()) {
      step.feedback_criterion = supervisor::criterion_from_string(s.at("feedback_criterion").get<std::string>());
    }
    t.steps.push_back(std::move(step));
  }
  t.revision_declined = j.at("revision_declined").get<bool>();
  if (!j.at("error").is_null()) t.error = j.at("error").get<std::string>();
  return t;
}

std::vector<AgentTurn> ConversationRecord::full_conversation() const {
  std::vector<AgentTurn> all = seed_turns;
  all.insert(all.end(), generated_turns.begin(), generated_turns.end());
  return all;
}

json ConversationRecord::to_json() const {
  json traces = json::array();
  for (const auto& t : turn_traces) {
    json tj = orchestrator::to_json(t.trace);
    tj["turn_index"] = t.turn_index;
    traces.push_back(std::move(tj));
  }
  json j = {{"schema_version", kSchemaVersion},
            {"source_id", source_id},
            {"record_seed", record_seed},
            {"theme_profile", theme_profile.to_json()},
            {"seed_turns", turns_to_json(seed_turns)},
            {"generated_turns", turns_to_json(generated_turns)},
            {"turn_traces", std::move(traces)},
            {"termination", to_string(termination)},
            {"error", opt(error)},
            {"config", config.to_json()}};
  if (score) {
    json audits = json::array();
    for (const auto& a : score->audits) audits.push_back(orchestrator::to_json(a));
    j["score"] = {{"conversation", orchestrator::to_json(score->score)},
                  {"audits", std::move(audits)},
                  {"responder_turns", score->responder_turns},
                  {"failed_audits", score->failed_audits},
                  {"coverage", score->coverage}};
  } else {
    j["score"] = nullptr;
  }
  j["score_error"] = opt(score_error);
  return j;
}

ConversationRecord ConversationRecord::from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw SchemaError("unsupported record version " + j.at("schema_version").dump());
    }
    ConversationRecord r;
    r.source_id = j.at("source_id").get<std::string>();
    r.record_seed = j.at("record_seed").get<std::uint64_t>();
    // A record that failed before seeding has no usable theme profile.
    if (const auto& tp = j.at("theme_profile"); !tp.value("target_behavior", "").empty()) {
      r.theme_profile = seeker::ThemeProfile::from_json(tp);
    }
    r.seed_turns = turns_from_json(j.at("seed_turns"));
    r.generated_turns = turns_from_json(j.at("generated_turns"));
    for (const auto& t : j.at("turn_traces")) {
      r.turn_traces.push_back({t.at("turn_index").get<std::size_t>(), trace_from_json(t)});
    }
    r.termination = termination_from_string(j.at("termination").get<std::string>());
    if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    r.config = SessionConfig::from_json(j.at("config"));
    if (const auto& s = j.at("score"); !s.is_null()) {
      RecordScore rs;
      rs.score = score_from_json(s.at("conversation"));
      for (const auto& a : s.at("audits")) rs.audits.push_back(audit_from_json(a));
      rs.responder_turns = s.at("responder_turns").get<std::size_t>();
      rs.failed_audits = s.at("failed_audits").get<std::size_t>();
      rs.coverage = s.at("coverage").get<double>();
      r.score = std::move(rs);
    }
    if (auto it = j.find("score_error"); it != j.end() && !it->is_null()) r.score_error = it->get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed conversation record: ") + e.what());
  }
}

void ConversationRecord::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_atomic(path, to_json().dump(2) + "\n");
}

ConversationRecord ConversationRecord::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("record " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Running and scoring

RecordScore score_turns(std::span<const AgentTurn> context, std::span<const AgentTurn> turns,
                        const judge::Judge& judge, llm::Gateway& gateway, const std::string& session) {
  RecordScore out;
  std::vector<AgentTurn> history(context.begin(), context.end());
  std::string last_error;
  for (const auto& turn : turns) {
    if (turn.speaker == Speaker::responder) {
      ++out.responder_turns;
      try {
        out.audits.push_back(judge.audit_turn(history, turn.text, gateway, session));
      } catch (const AuditFailed& e) {
        ++out.failed_audits;
        last_error = e.what();
      }
    }
    history.push_back(turn);
  }
  if (out.responder_turns == 0) throw EmptyConversation("no responder turns to score");
  if (out.audits.empty()) throw AuditFailed("every audit failed; last error: " + last_error);
  out.score = rubric::aggregate_conversation(out.audits);
  out.coverage = static_cast<double>(out.audits.size()) / static_cast<double>(out.responder_turns);
  return out;
}

Orchestrator::Orchestrator(Agents agents, const supervisor::CalibrationProfile* profile)
    : agents_(std::move(agents)), profile_(profile) {}

ConversationRecord Orchestrator::run_conversation(const std::string& source_id, const SessionSeed& seed,
                                                  const SessionConfig& config, llm::Gateway& gateway) const {
  config.validate();
  if (config.mode == Mode::supervised && profile_ == nullptr) {
    throw PreconditionError("supervised mode needs a calibration profile");
  }

  ConversationRecord rec;
  rec.source_id = source_id;
  rec.record_seed = record_seed(config.run_seed, source_id);
  rec.theme_profile = seed.theme_profile;
  rec.seed_turns = seed.seed_turns;
  rec.config = config;

  const supervisor::RevisionPolicy policy =
      config.mode == Mode::baseline ? supervisor::RevisionPolicy{0} : config.revision_policy;
  const supervisor::Supervisor sup(agents_.gate_judge, agents_.responder, profile_, policy);
  const auto& target = seed.theme_profile.target_behavior;

  std::vector<AgentTurn> history = seed.seed_turns;
  Speaker next = history.empty() ? Speaker::seeker : other(history.back().speaker);

  try {
    while (rec.generated_turns.size() < static_cast<std::size_t>(config.max_turns)) {
      std::optional<AgentTurn> turn;
      if (next == Speaker::seeker) {
        turn = agents_.seeker.generate_seeker_turn(seed.theme_profile, history, gateway, source_id);
        if (!turn) {
          rec.termination = Termination::natural_end;
          return rec;
        }
      } else {
        responder::ResponderContext ctx{target, history, std::nullopt};
        auto candidate = agents_.responder.generate_response(ctx, gateway, source_id);
        if (!candidate) {
          rec.termination = Termination::natural_end;
          return rec;
        }
        rec.turn_traces.push_back({rec.generated_turns.size(), {}});
        auto& trace = rec.turn_traces.back().trace;
        try {
          turn = AgentTurn{Speaker::responder,
                           sup.supervise_turn(history, target, candidate->text, gateway, source_id, trace)};
        } catch (const BudgetExceeded&) {
          throw;
        } catch (const std::exception& e) {
          trace.error = e.what();
          throw;
        }
      }
      history.push_back(*turn);
      rec.generated_turns.push_back(std::move(*turn));
      next = other(next);
    }
    rec.termination = Termination::turn_cap;
  } catch (const BudgetExceeded&) {
    throw;
  } catch (const std::exception& e) {
    rec.termination = Termination::failed;
    rec.error = e.what();
  }
  return rec;
}

RecordScore Orchestrator::score_record(const ConversationRecord& record, llm::Gateway& gateway) const {
  if (record.termination == Termination::failed) {
    throw PreconditionError("record '" + record.source_id + "' failed and cannot be scored");
  }
  return score_turns(record.seed_turns, record.generated_turns, agents_.score_judge, gateway, record.source_id);
}

fs::path run_directory(const fs::path& output_root, const SessionConfig& config) {
  return output_root / (std::string(to_string(config.mode)) + "-" + config.hash());
}

fs::path record_path(const fs::path& run_dir, const std::string& source_id) {
  return run_dir / "records" / (source_id + ".json");
}

namespace {
fs::path failed_record_path(const fs::path& run_dir, const std::string& source_id) {
  return run_dir / "records" / (source_id + ".failed.json");
}
}  // namespace

RunSummary Orchestrator::run_corpus(const CorpusManifest& manifest, const SessionConfig& config,
                                    llm::Gateway& gateway, const fs::path& output_root,
                                    const RunOptions& options) const {
  manifest.validate();
  config.validate();
  if (config.mode == Mode::supervised && profile_ == nullptr) {
    throw PreconditionError("supervised mode needs a calibration profile");
  }

  RunSummary summary;
  summary.run_dir = run_directory(output_root, config);
  fs::create_directories(summary.run_dir / "records");
  const auto config_file = summary.run_dir / "config.json";
  if (!fs::exists(config_file)) write_atomic(config_file, config.to_json().dump(2) + "\n");

  std::vector<const ManifestEntry*> pending;
  for (const auto& e : manifest.entries) {
    if (fs::exists(record_path(summary.run_dir, e.id))) {
      ++summary.skipped;
    } else {
      pending.push_back(&e);
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr fatal;

  auto run_one = [&](const ManifestEntry& entry) {
    ConversationRecord rec;
    try {
      const auto transcript = load_transcript(entry.path);
      const auto seed = seed_session(transcript, agents_.seeker, gateway, config.seed_fraction, entry.id);
      rec = run_conversation(entry.id, seed, config, gateway);
    } catch (const BudgetExceeded&) {
      throw;
    } catch (const std::exception& e) {
      rec = ConversationRecord{};
      rec.source_id = entry.id;
      rec.record_seed = record_seed(config.run_seed, entry.id);
      rec.config = config;
      rec.termination = Termination::failed;
      rec.error = e.what();
    }
    if (rec.termination != Termination::failed && options.score) {
      try {
        rec.score = score_record(rec, gateway);
      } catch (const BudgetExceeded&) {
        throw;
      } catch (const std::exception& e) {
        rec.score_error = e.what();
      }
    }

    if (rec.termination == Termination::failed) {
      rec.save(failed_record_path(summary.run_dir, entry.id));
    } else {
      rec.save(record_path(summary.run_dir, entry.id));
      std::error_code ec;
      fs::remove(failed_record_path(summary.run_dir, entry.id), ec);
    }

    std::lock_guard lock(mu);
    ++summary.executed;
    ++summary.terminations[std::string(to_string(rec.termination))];
    if (rec.termination == Termination::failed) summary.failed_ids.push_back(entry.id);
  };

  auto worker = [&] {
    while (!stop.load()) {
      const auto i = next.fetch_add(1);
      if (i >= pending.size()) return;
      try {
        run_one(*pending[i]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        stop.store(true);
      }
    }
  };

  const auto n_workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.parallel)), 1, std::max<std::size_t>(1, pending.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::sort(summary.failed_ids.begin(), summary.failed_ids.end());
  return summary;
}

std::vector<ConversationRecord> load_records(const fs::path& run_dir) {
  std::vector<ConversationRecord> out;
  const auto dir = run_dir / "records";
  if (!fs::is_directory(dir)) throw PreconditionError("no records directory under " + run_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || !name.ends_with(".json") || name.ends_with(".failed.json")) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(ConversationRecord::load(f));
  return out;
}

}  // namespace pairsafe::orchestrator
