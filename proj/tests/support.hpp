// Shared fixtures for the unit and acceptance tests.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairsafe/gateway.hpp"
#include "pairsafe/judge.hpp"
#include "pairsafe/orchestrator.hpp"
#include "pairsafe/rubric.hpp"
#include "pairsafe/supervisor.hpp"

namespace pairsafe::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "pairsafe-test-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline llm::GatewayOptions no_backoff() {
  llm::GatewayOptions o;
  o.retry.backoff_base = std::chrono::milliseconds(0);
  return o;
}

inline std::unique_ptr<llm::Gateway> make_gateway(std::shared_ptr<llm::ChatBackend> backend,
                                                  llm::GatewayOptions options = no_backoff()) {
  return std::make_unique<llm::Gateway>(std::move(backend), std::make_shared<llm::HashEmbedder>(), std::move(options));
}

// Counts in rubric::kCountKeys order.
using Counts = std::array<int, 10>;
enum CountIndex { GI, SR, CR, AF, EA, SC, P, PWP, C, Q };

inline rubric::TurnAudit make_audit(rubric::GlobalRatings r, const Counts& counts, int window = 4) {
  rubric::TurnAudit a;
  a.ratings = r;
  std::array<double, 10> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = counts[i];
  a.counts = rubric::BehaviorCounts::from_values(v, false);
  for (auto k : rubric::kRatingKeys) a.rationales[std::string(k)] = "because " + std::string(k);
  a.window_size = window;
  return a;
}

inline std::string judge_reply(const rubric::TurnAudit& a) { return judge::serialize_audit(a).dump(); }

// A response the reference profile below allows, and one it rejects on several criteria.
inline rubric::TurnAudit good_audit() {
  Counts c{};
  c[SR] = 1;
  c[CR] = 1;
  c[Q] = 1;
  c[SC] = 1;
  c[AF] = 1;
  c[EA] = 1;
  return make_audit({5, 5, 5, 5}, c);
}

inline rubric::TurnAudit bad_audit() {
  Counts c{};
  c[P] = 2;
  c[C] = 1;
  c[Q] = 3;
  return make_audit({1, 1, 1, 1}, c);
}

// Random valid audit for round-trip and fuzz tests.
inline rubric::TurnAudit random_audit(std::mt19937_64& rng) {
  Counts c{};
  for (auto& x : c) x = static_cast<int>(rng() % 20);
  auto a = make_audit({1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 5),
                          1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 5)},
                         c, 1 + static_cast<int>(rng() % 4));
  a.rationales["empathy"] = "text with \"quotes\" and {braces} " + std::to_string(rng() % 1000);
  return a;
}

// One random structural edit of a JSON document.
inline void mutate(nlohmann::json& j, std::mt19937_64& rng) {
  std::vector<nlohmann::json*> nodes;
  std::vector<std::pair<nlohmann::json*, std::string>> members;
  auto walk = [&](auto&& self, nlohmann::json& n) -> void {
    nodes.push_back(&n);
    if (n.is_object()) {
      for (auto& [k, v] : n.items()) {
        members.emplace_back(&n, k);
        self(self, v);
      }
    } else if (n.is_array()) {
      for (auto& v : n) self(self, v);
    }
  };
  walk(walk, j);
  nlohmann::json* target = nodes[rng() % nodes.size()];
  const std::vector<nlohmann::json> replacements = {nullptr, true, -1, 0, 6, 2.5, 1e300, -1e9, "4", nlohmann::json::array(), nlohmann::json::object(),
                                          nlohmann::json::array({1, 2}), 3, 1.0, "", 1e7};
  switch (rng() % 4) {
    case 0:
      *target = replacements[rng() % replacements.size()];
      break;
    case 1:
      if (!members.empty()) {
        auto& [obj, key] = members[rng() % members.size()];
        if (obj->contains(key)) obj->erase(key);
      }
      break;
    case 2:
      if (target->is_object()) (*target)["extra_" + std::to_string(rng() % 10)] = replacements[rng() % replacements.size()];
      break;
    case 3:
      if (!members.empty()) {
        auto& [obj, key] = members[rng() % members.size()];
        if (obj->contains(key)) {
          nlohmann::json v = (*obj)[key];
          obj->erase(key);
          (*obj)[key + "x"] = v;
        }
      }
      break;
  }
}

// Byte-level damage to the serialized text.
inline std::string corrupt(std::string s, std::mt19937_64& rng) {
  if (s.empty()) return s;
  const char alphabet[] = "{}[]\",:0123456789 \n-.eE\\`";
  switch (rng() % 4) {
    case 0:
      s.erase(rng() % s.size(), 1 + rng() % 8);
      break;
    case 1:
      s.insert(rng() % s.size(), 1, alphabet[rng() % (sizeof alphabet - 1)]);
      break;
    case 2:
      s[rng() % s.size()] = static_cast<char>(rng() % 256);
      break;
    case 3:
      s = s.substr(0, rng() % s.size());
      break;
  }
  return s;
}

// Column of reference high/low means: ratings, counts per conversation and the two ratios.
struct ColumnMeans {
  double rq, pct_cr, mia, mina, cc, ss, partnership, empathy;
};
inline constexpr ColumnMeans kHighMeans{0.88, 0.54, 7.72, 1.07, 3.08, 3.40, 3.69, 3.62};
inline constexpr ColumnMeans kLowMeans{0.37, 0.21, 2.78, 3.86, 1.95, 1.83, 2.11, 2.07};

// Conversation score whose metric values are `m`, with counts spread over `turns` turns.
inline rubric::ConversationScore score_with(const ColumnMeans& m, int turns) {
  rubric::ConversationScore s;
  s.mean_ratings = {m.cc, m.ss, m.partnership, m.empathy};
  s.n_responder_turns = turns;
  s.per_turn_counts.normalized = true;
  s.per_turn_counts.seek_collaboration = m.mia / turns;
  s.per_turn_counts.persuade = m.mina / turns;
  s.derived.rq_ratio = m.rq;
  s.derived.pct_complex_reflections = m.pct_cr;
  s.derived.mia = m.mia / turns;
  s.derived.mina = m.mina / turns;
  s.derived.relational = (m.partnership + m.empathy) / 2;
  s.derived.technical = (m.cc + m.ss) / 2;
  return s;
}

inline ColumnMeans shifted(ColumnMeans m, double sign, const ColumnMeans& delta) {
  m.rq += sign * delta.rq;
  m.pct_cr += sign * delta.pct_cr;
  m.mia += sign * delta.mia;
  m.mina += sign * delta.mina;
  m.cc += sign * delta.cc;
  m.ss += sign * delta.ss;
  m.partnership += sign * delta.partnership;
  m.empathy += sign * delta.empathy;
  return m;
}

// Two conversations per label at mean +/- delta, so each label's mean equals the column
// mean exactly and its sample sd is delta * sqrt(2).
inline std::vector<supervisor::LabeledScore> reference_corpus(int turns = 4) {
  const ColumnMeans high_delta{0.6, 0.1, 1.0, 0.2, 0.3, 0.3, 0.3, 0.3};
  const ColumnMeans low_delta{0.1, 0.05, 0.5, 0.5, 0.3, 0.3, 0.3, 0.3};
  std::vector<supervisor::LabeledScore> out;
  for (double sign : {1.0, -1.0}) {
    out.push_back({score_with(shifted(kHighMeans, sign, high_delta), turns), supervisor::Label::high});
    out.push_back({score_with(shifted(kLowMeans, sign, low_delta), turns), supervisor::Label::low});
  }
  return out;
}

inline supervisor::CalibrationProfile reference_profile() {
  supervisor::CalibrationOptions o;
  o.corpus_id = "reference-synthetic";
  o.count_basis = supervisor::CountBasis::per_conversation;
  auto p = supervisor::calibrate(reference_corpus(), o);
  p.created_at = "2026-01-01T00:00:00Z";
  return p;
}

// Reactive stand-in for all five agents, keyed on the request's agent and session.
//
// Responder candidates carry a quality level "L<k>"; each revision raises it by one. The
// judge returns good_audit() when the level reaches the session's required level and
// bad_audit() otherwise. Seeker and responder end the session once the rendered history
// reaches `end_after` lines for that session (never by default).
class ScriptedWorld {
 public:
  std::map<std::string, int> required_level;
  std::map<std::string, int> end_after;
  std::string target_behavior = "Reflect the client's ambivalence about drinking";

  std::string operator()(const llm::ChatRequest& r) {
    {
      std::lock_guard lock(mu_);
      ++calls_[r.agent];
    }
    const std::string& user = r.messages.back().content;
    if (r.agent == llm::agent::extractor) return themes();
    if (r.agent == llm::agent::judge || r.agent == llm::agent::scorer) {
      return judge_reply(level_of(candidate_of(user)) >= lookup(required_level, r.session, 0) ? good_audit()
                                                                                               : bad_audit());
    }
    const auto lines = history_lines(user);
    if (lines.size() >= static_cast<std::size_t>(lookup(end_after, r.session, 1 << 30))) return "";
    if (r.agent == llm::agent::seeker) return "C: I keep going back and forth, part " + std::to_string(lines.size());
    if (user.find("<MITI_FEEDBACK>") != std::string::npos) {
      const int k = level_of(lines.back());
      return "T: It sounds like part of you wants change L" + std::to_string(k + 1);
    }
    return "T: You are weighing both sides L0 at " + std::to_string(lines.size());
  }

  int calls(const std::string& agent) const {
    std::lock_guard lock(mu_);
    auto it = calls_.find(agent);
    return it == calls_.end() ? 0 : it->second;
  }

  std::string themes() const {
    nlohmann::json j = {{"key_beliefs", {"drinking helps me relax"}},
                        {"core_emotions", {"ambivalence", "shame"}},
                        {"recurrent_narratives", {"work stress"}},
                        {"symptom_patterns", {"poor sleep"}},
                        {"target_behavior", target_behavior}};
    return j.dump();
  }

  static int level_of(const std::string& text) {
    static const std::regex re("L([0-9]+)");
    std::smatch m;
    if (!std::regex_search(text, m, re)) return 0;
    return std::stoi(m[1].str());
  }

  static std::string candidate_of(const std::string& user) {
    const std::string marker = "(the output being evaluated):\nT: ";
    auto pos = user.rfind(marker);
    return pos == std::string::npos ? user : user.substr(pos + marker.size());
  }

  static std::vector<std::string> history_lines(const std::string& user) {
    std::vector<std::string> out;
    const std::string open = "<CONVERSATION_HISTORY>\n";
    auto b = user.find(open);
    auto e = user.find("</CONVERSATION_HISTORY>");
    if (b == std::string::npos || e == std::string::npos) return out;
    std::string body = user.substr(b + open.size(), e - b - open.size());
    std::size_t pos = 0;
    while (pos < body.size()) {
      auto nl = body.find('\n', pos);
      if (nl == std::string::npos) nl = body.size();
      if (nl > pos) out.push_back(body.substr(pos, nl - pos));
      pos = nl + 1;
    }
    return out;
  }

 private:
  static int lookup(const std::map<std::string, int>& m, const std::string& key, int fallback) {
    auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
  }

  mutable std::mutex mu_;
  std::map<std::string, int> calls_;
};

inline std::shared_ptr<llm::FunctionBackend> backend_for(std::shared_ptr<ScriptedWorld> world) {
  return std::make_shared<llm::FunctionBackend>([world](const llm::ChatRequest& r) { return (*world)(r); });
}

inline orchestrator::Agents default_agents() {
  judge::JudgeConfig gate;
  judge::JudgeConfig scorer;
  scorer.agent = llm::agent::scorer;
  return {seeker::SeekerSim{}, responder::Responder{}, judge::Judge(gate), judge::Judge(scorer)};
}

// `n` transcripts of `turns` alternating lines plus a manifest naming them s0..s<n-1>.
inline fs::path write_corpus(const fs::path& dir, int n, int turns = 9) {
  std::string manifest = "id,label,path\n";
  for (int i = 0; i < n; ++i) {
    std::string text;
    for (int t = 0; t < turns; ++t) {
      text += (t % 2 == 0 ? "C: client line " : "T: counselor line ") + std::to_string(t) + " of s" +
              std::to_string(i) + "\n";
    }
    const std::string id = "s" + std::to_string(i);
    write_file(dir / "transcripts" / (id + ".txt"), text);
    manifest += id + "," + (i % 2 == 0 ? "high" : "low") + ",transcripts/" + id + ".txt\n";
  }
  write_file(dir / "manifest.csv", manifest);
  return dir / "manifest.csv";
}

}  // namespace pairsafe::testing
