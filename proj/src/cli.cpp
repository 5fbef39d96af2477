#include "pairsafe/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include "pairsafe/errors.hpp"
#include "pairsafe/gateway.hpp"
#include "pairsafe/http_backend.hpp"
#include "pairsafe/orchestrator.hpp"
#include "pairsafe/saturation.hpp"
#include "pairsafe/similarity.hpp"
#include "pairsafe/stats.hpp"
#include "pairsafe/supervisor.hpp"

namespace pairsafe::cli {

namespace fs = std::filesystem;
namespace orch = pairsafe::orchestrator;
namespace sup = pairsafe::supervisor;

namespace {

struct Options {
  // shared
  std::string backend;
  std::optional<std::int64_t> budget_tokens;
  std::string log;
  bool dry_run = false;
  std::string chat_model;
  std::string judge_model;
  int parallel = 1;
  std::uint64_t seed = 0;
  int retries = 3;

  // per command
  std::string manifest;
  std::string out;
  std::string mode = "supervised";
  int rounds = 1;
  int max_turns = 20;
  std::string profile;
  std::string count_basis = "per_turn";
  std::string corpus_id;
  std::string created_at;
  std::string baseline_dir;
  std::string supervised_dir;
  std::string run_dir;
  bool strict_pairing = false;
  bool no_score = false;
};

void add_backend_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--backend", o.backend, "live, or scripted:PATH for a canned-response script");
  cmd->add_option("--budget-tokens", o.budget_tokens, "Refuse further calls once this many tokens were used");
  cmd->add_option("--log", o.log, "Append request/response records (NDJSON) to this file");
  cmd->add_option("--chat-model", o.chat_model, "Model id for the responder, seeker and extractor");
  cmd->add_option("--judge-model", o.judge_model, "Model id for the judge (defaults to --chat-model)");
  cmd->add_option("--retries", o.retries, "Attempts per call on transport errors")->check(CLI::Range(1, 10));
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw PreconditionError("cannot write " + path.string());
  out << text;
}

std::unique_ptr<llm::Gateway> make_gateway(const Options& o, const fs::path& default_log = {}) {
  std::shared_ptr<llm::ChatBackend> chat;
  std::shared_ptr<llm::Embedder> embedder;
  if (o.backend == "live") {
    const auto cfg = llm::LiveConfig::from_env();
    chat = std::make_shared<llm::HttpChatBackend>(cfg);
    embedder = std::make_shared<llm::HttpEmbedder>(cfg);
  } else if (o.backend.starts_with("scripted:")) {
    const fs::path script = o.backend.substr(9);
    if (script.empty()) throw PreconditionError("--backend scripted: needs a script path");
    chat = llm::ScriptedBackend::load(script);
    embedder = std::make_shared<llm::HashEmbedder>();
  } else if (o.backend.empty()) {
    throw PreconditionError("--backend is required (live or scripted:PATH)");
  } else {
    throw PreconditionError("unknown backend '" + o.backend + "' (expected live or scripted:PATH)");
  }

  llm::GatewayOptions go;
  go.retry.max_attempts = o.retries;
  go.token_budget = o.budget_tokens;
  if (!o.log.empty()) {
    go.log = std::make_shared<llm::RequestLog>(o.log);
  } else if (!default_log.empty()) {
    go.log = std::make_shared<llm::RequestLog>(default_log);
  }
  return std::make_unique<llm::Gateway>(std::move(chat), std::move(embedder), std::move(go));
}

orch::Agents make_agents(const Options& o) {
  const std::string judge_model = o.judge_model.empty() ? o.chat_model : o.judge_model;
  seeker::SeekerConfig sc;
  sc.model_id = o.chat_model;
  responder::ResponderConfig rc;
  rc.model_id = o.chat_model;
  judge::JudgeConfig gate;
  gate.model_id = judge_model;
  gate.agent = llm::agent::judge;
  judge::JudgeConfig scorer = gate;
  scorer.agent = llm::agent::scorer;
  return {seeker::SeekerSim(sc), responder::Responder(rc), judge::Judge(gate), judge::Judge(scorer)};
}

sup::CalibrationProfile load_profile(const Options& o) {
  if (o.profile.empty()) throw PreconditionError("--profile is required");
  return sup::CalibrationProfile::load(o.profile);
}

// Runs fn(i) for i in [0, n) on up to `parallel` threads; the first exception wins.
template <class Fn>
void parallel_for(std::size_t n, int parallel, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    while (!stop.load()) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        stop.store(true);
      }
    }
  };
  const auto workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, parallel)), 1, std::max<std::size_t>(n, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
  }
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------

int cmd_calibrate(const Options& o, std::ostream& out) {
  if (o.manifest.empty() || o.out.empty()) throw PreconditionError("calibrate needs --manifest and --out");
  const auto manifest = orch::CorpusManifest::load(o.manifest);
  const auto basis = o.count_basis == "per_conversation" ? sup::CountBasis::per_conversation
                     : o.count_basis == "per_turn"
                         ? sup::CountBasis::per_turn
                         : throw PreconditionError("--count-basis must be per_turn or per_conversation");

  std::vector<const orch::ManifestEntry*> labeled;
  for (const auto& e : manifest.entries) {
    if (e.label != sup::Label::unlabeled) labeled.push_back(&e);
  }
  if (o.dry_run) {
    out << "plan: calibrate\n  manifest: " << o.manifest << " (" << labeled.size() << " labeled of "
        << manifest.entries.size() << ")\n  profile: " << o.out << "\n  count basis: " << o.count_basis
        << "\n  backend: " << o.backend << '\n';
    return kOk;
  }

  auto gateway = make_gateway(o);
  const auto agents = make_agents(o);
  std::vector<sup::LabeledScore> scores(labeled.size());
  parallel_for(labeled.size(), o.parallel, [&](std::size_t i) {
    const auto& e = *labeled[i];
    const auto transcript = orch::load_transcript(e.path);
    scores[i].score = orch::score_turns({}, transcript, agents.score_judge, *gateway, e.id).score;
    scores[i].label = e.label;
  });

  sup::CalibrationOptions co;
  co.corpus_id = o.corpus_id.empty() ? fs::path(o.manifest).stem().string() : o.corpus_id;
  co.count_basis = basis;
  auto profile = sup::calibrate(scores, co);
  profile.created_at = o.created_at.empty() ? now_utc() : o.created_at;
  profile.save(o.out);

  std::vector<rubric::ConversationScore> high, low;
  for (const auto& s : scores) (s.label == sup::Label::high ? high : low).push_back(s.score);
  const auto table = stats::compare_groups("high", high, "low", low, stats::TestKind::welch);

  std::string report = table.to_report();
  report += "\nThresholds (turn / conversation):\n";
  for (const auto& c : profile.criteria) {
    report += "  " + std::string(sup::to_string(c.id)) + ": " + std::to_string(c.turn_threshold) + " / " +
              std::to_string(c.conversation_bound) + (c.enabled ? "" : " (disabled)") + "\n";
  }
  for (const auto& w : profile.warnings) report += "warning: " + w + "\n";

  fs::path base(o.out);
  base.replace_extension();
  write_text(base.string() + ".report.txt", report);
  write_text(base.string() + ".report.csv", table.to_csv());
  out << report << "profile written to " << o.out << '\n';
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.manifest.empty() || o.out.empty()) throw PreconditionError("simulate needs --manifest and --out");
  orch::SessionConfig config;
  config.mode = orch::mode_from_string(o.mode);
  config.max_turns = o.max_turns;
  config.revision_policy.max_rounds_per_turn = config.mode == orch::Mode::baseline ? 0 : o.rounds;
  config.run_seed = o.seed;
  config.validate();

  const auto manifest = orch::CorpusManifest::load(o.manifest);
  std::optional<sup::CalibrationProfile> profile;
  if (config.mode == orch::Mode::supervised) profile = load_profile(o);
  const auto run_dir = orch::run_directory(o.out, config);

  if (o.dry_run) {
    std::size_t done = 0;
    for (const auto& e : manifest.entries) done += fs::exists(orch::record_path(run_dir, e.id));
    out << "plan: simulate\n  manifest: " << o.manifest << " (" << manifest.entries.size() << " entries, " << done
        << " already persisted)\n  run dir: " << run_dir.string() << "\n  config: " << config.to_json().dump()
        << "\n  backend: " << o.backend << "\n  parallel: " << o.parallel << '\n';
    return kOk;
  }

  auto gateway = make_gateway(o, run_dir / "requests.ndjson");
  const orch::Orchestrator orchestrator(make_agents(o), profile ? &*profile : nullptr);
  orch::RunOptions ro;
  ro.parallel = o.parallel;
  ro.score = !o.no_score;
  const auto summary = orchestrator.run_corpus(manifest, config, *gateway, o.out, ro);

  out << "run dir: " << summary.run_dir.string() << '\n'
      << "executed: " << summary.executed << ", skipped (already persisted): " << summary.skipped << '\n';
  for (const auto& [kind, n] : summary.terminations) out << "  " << kind << ": " << n << '\n';
  out << "tokens used: " << gateway->tokens_used() << '\n';
  if (!summary.failed_ids.empty()) {
    err << summary.failed_ids.size() << " record(s) failed:";
    for (const auto& id : summary.failed_ids) err << ' ' << id;
    err << "\nsee the .failed.json files in " << (summary.run_dir / "records").string() << '\n';
    return kBackendError;
  }
  return kOk;
}

std::vector<stats::ScoredConversation> scored(const std::vector<orch::ConversationRecord>& records,
                                              const std::string& dir) {
  std::vector<stats::ScoredConversation> out;
  for (const auto& r : records) {
    if (!r.score) {
      throw SchemaError("record '" + r.source_id + "' in " + dir + " is unscored" +
                        (r.score_error ? ": " + *r.score_error : std::string()));
    }
    out.emplace_back(r.source_id, r.score->score);
  }
  return out;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.baseline_dir.empty() || o.supervised_dir.empty()) {
    throw PreconditionError("compare needs --baseline and --supervised run directories");
  }
  const auto profile = load_profile(o);
  if (o.dry_run) {
    out << "plan: compare\n  baseline: " << o.baseline_dir << "\n  supervised: " << o.supervised_dir
        << "\n  profile: " << o.profile << "\n  pairing: " << (o.strict_pairing ? "strict" : "fallback to welch")
        << '\n';
    return kOk;
  }
  const auto base = scored(orch::load_records(o.baseline_dir), o.baseline_dir);
  const auto supv = scored(orch::load_records(o.supervised_dir), o.supervised_dir);
  if (base.empty() || supv.empty()) throw InsufficientData("both run directories need scored records");

  stats::CompareOptions co;
  co.strict_pairing = o.strict_pairing;
  const auto table = stats::compare_settings(base, supv, co);

  auto pass_count = [&](const std::vector<stats::ScoredConversation>& v) {
    std::size_t n = 0;
    for (const auto& [id, s] : v) n += sup::conversation_pass(s, profile);
    return n;
  };
  std::string report = table.to_report();
  report += "\nConversations passing the calibrated bounds: baseline " + std::to_string(pass_count(base)) + "/" +
            std::to_string(base.size()) + ", supervised " + std::to_string(pass_count(supv)) + "/" +
            std::to_string(supv.size()) + "\n";
  out << report;
  if (!o.out.empty()) {
    write_text(fs::path(o.out) / "comparison.txt", report);
    write_text(fs::path(o.out) / "comparison.csv", table.to_csv());
  }
  return kOk;
}

int cmd_saturate(const Options& o, std::ostream& out) {
  if (o.run_dir.empty()) throw PreconditionError("saturate needs --run");
  if (o.rounds < 0 || o.rounds > sup::RevisionPolicy::kMaxRounds) {
    throw PreconditionError("--rounds must be in 0..4");
  }
  const auto profile = load_profile(o);
  const auto records = orch::load_records(o.run_dir);
  if (o.dry_run) {
    out << "plan: saturate\n  run dir: " << o.run_dir << " (" << records.size() << " records)\n  rounds: "
        << o.rounds << "\n  backend: " << o.backend << '\n';
    return kOk;
  }
  auto gateway = make_gateway(o);
  const auto agents = make_agents(o);
  const stats::SaturationAgents sa{agents.gate_judge, agents.score_judge, agents.responder};
  const auto curve = stats::pass_rate_curve(records, profile, sa, *gateway, o.rounds);
  out << curve.to_text();
  if (!o.out.empty()) write_text(fs::path(o.out) / "saturation.csv", curve.to_csv());
  return kOk;
}

std::string join_seeker(std::span<const AgentTurn> turns) {
  std::string s;
  for (const auto& t : turns) {
    if (t.speaker != Speaker::seeker) continue;
    if (!s.empty()) s += ' ';
    s += t.text;
  }
  return s;
}

int cmd_validate_seeker(const Options& o, std::ostream& out) {
  if (o.manifest.empty() || o.run_dir.empty()) throw PreconditionError("validate-seeker needs --manifest and --run");
  const auto manifest = orch::CorpusManifest::load(o.manifest);
  const auto records = orch::load_records(o.run_dir);

  std::vector<std::string> ids, references, simulated;
  std::size_t skipped = 0;
  for (const auto& r : records) {
    auto it = std::find_if(manifest.entries.begin(), manifest.entries.end(),
                           [&](const auto& e) { return e.id == r.source_id; });
    if (it == manifest.entries.end()) {
      ++skipped;
      continue;
    }
    const auto transcript = orch::load_transcript(it->path);
    const auto k = orch::seed_length(transcript.size(), r.config.seed_fraction);
    auto ref = join_seeker(std::span(transcript).subspan(std::min(k, transcript.size())));
    auto sim = join_seeker(r.generated_turns);
    if (ref.empty() || sim.empty()) {
      ++skipped;
      continue;
    }
    ids.push_back(r.source_id);
    references.push_back(std::move(ref));
    simulated.push_back(std::move(sim));
  }
  if (ids.size() < 2) throw InsufficientData("validate-seeker needs at least 2 records with seeker text on both sides");

  if (o.dry_run) {
    out << "plan: validate-seeker\n  pairs: " << ids.size() << " (" << skipped << " records skipped)\n  seed: " << o.seed
        << "\n  backend: " << o.backend << '\n';
    return kOk;
  }

  const auto perm = similarity::derangement(ids.size(), o.seed);
  std::vector<similarity::TextPair> matched, mismatched;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    matched.push_back({references[i], simulated[i]});
    mismatched.push_back({references[i], simulated[perm[i]]});
  }
  auto gateway = make_gateway(o);
  const auto report = similarity::validate_simulator(matched, mismatched, *gateway);
  std::string text = report.to_text();
  text += "derangement seed: " + std::to_string(o.seed) + "\n";
  if (skipped) text += "records skipped: " + std::to_string(skipped) + "\n";
  out << text;
  if (!o.out.empty()) write_text(fs::path(o.out) / "seeker_validation.txt", text);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Judge-supervised counseling dialogue simulation and MITI evaluation", "pairsafe"};
  app.require_subcommand(1);

  auto* calibrate = app.add_subcommand("calibrate", "Score a labeled corpus and derive gating thresholds");
  calibrate->add_option("--manifest", o.manifest, "Corpus manifest (id,label,path)")->required();
  calibrate->add_option("--out", o.out, "Calibration profile to write (JSON)")->required();
  calibrate->add_option("--count-basis", o.count_basis, "per_turn or per_conversation");
  calibrate->add_option("--corpus-id", o.corpus_id, "Identifier stored in the profile");
  calibrate->add_option("--created-at", o.created_at, "Timestamp stored in the profile (default: now)");
  calibrate->add_option("--parallel", o.parallel, "Concurrent conversations")->check(CLI::PositiveNumber);
  calibrate->add_flag("--dry-run", o.dry_run, "Print the plan without calling the backend");
  add_backend_flags(calibrate, o);

  auto* simulate = app.add_subcommand("simulate", "Generate conversations for a manifest");
  simulate->add_option("--manifest", o.manifest, "Corpus manifest")->required();
  simulate->add_option("--out", o.out, "Root directory for run directories")->required();
  simulate->add_option("--mode", o.mode, "baseline or supervised");
  simulate->add_option("--rounds", o.rounds, "Revision rounds per responder turn (supervised)")
      ->check(CLI::Range(0, sup::RevisionPolicy::kMaxRounds));
  simulate->add_option("--max-turns", o.max_turns, "Generated-turn cap, both speakers");
  simulate->add_option("--profile", o.profile, "Calibration profile (required for supervised)");
  simulate->add_option("--seed", o.seed, "Run seed");
  simulate->add_option("--parallel", o.parallel, "Concurrent conversations")->check(CLI::PositiveNumber);
  simulate->add_flag("--no-score", o.no_score, "Skip post-hoc scoring of finished records");
  simulate->add_flag("--dry-run", o.dry_run, "Print the plan without calling the backend");
  add_backend_flags(simulate, o);

  auto* compare = app.add_subcommand("compare", "Compare baseline and supervised run directories");
  compare->add_option("--baseline", o.baseline_dir, "Baseline run directory")->required();
  compare->add_option("--supervised", o.supervised_dir, "Supervised run directory")->required();
  compare->add_option("--profile", o.profile, "Calibration profile");
  compare->add_option("--out", o.out, "Directory for comparison.txt and comparison.csv");
  compare->add_flag("--strict-pairing", o.strict_pairing, "Fail on unpaired source ids instead of using Welch");
  compare->add_flag("--dry-run", o.dry_run, "Print the plan without reading records");

  auto* saturate = app.add_subcommand("saturate", "Cumulative pass rate over revision rounds");
  saturate->add_option("--run", o.run_dir, "Run directory with scored records")->required();
  saturate->add_option("--profile", o.profile, "Calibration profile");
  saturate->add_option("--rounds", o.rounds, "Revision rounds (0-4)");
  saturate->add_option("--out", o.out, "Directory for saturation.csv");
  saturate->add_flag("--dry-run", o.dry_run, "Print the plan without calling the backend");
  add_backend_flags(saturate, o);

  auto* validate = app.add_subcommand("validate-seeker", "Matched vs mismatched similarity of simulated clients");
  validate->add_option("--manifest", o.manifest, "Corpus manifest with the source transcripts")->required();
  validate->add_option("--run", o.run_dir, "Run directory with simulated records")->required();
  validate->add_option("--seed", o.seed, "Derangement seed");
  validate->add_option("--out", o.out, "Directory for seeker_validation.txt");
  validate->add_flag("--dry-run", o.dry_run, "Print the plan without calling the backend");
  add_backend_flags(validate, o);

  // CLI11 prints --help and parse errors itself; route them to our streams.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (saturate->parsed() && !saturate->count("--rounds")) o.rounds = sup::RevisionPolicy::kMaxRounds;

  try {
    if (calibrate->parsed()) return cmd_calibrate(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (compare->parsed()) return cmd_compare(o, out);
    if (saturate->parsed()) return cmd_saturate(o, out);
    if (validate->parsed()) return cmd_validate_seeker(o, out);
  } catch (const PairingMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.error_class()) {
      case ErrorClass::usage: return kUsage;
      case ErrorClass::data: return kDataError;
      case ErrorClass::backend: return kBackendError;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace pairsafe::cli
