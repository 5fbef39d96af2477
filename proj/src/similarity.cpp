#include "pairsafe/similarity.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "pairsafe/dialogue.hpp"
#include "pairsafe/errors.hpp"
#include "pairsafe/stats.hpp"

namespace pairsafe::similarity {

namespace detail {
extern const std::string_view kBuiltinFunctionWords;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PreconditionError("cosine: vectors differ in dimension");
  double dot = 0;
  double na = 0;
  double nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw ZeroVector("cosine of a zero vector is undefined");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double semantic_similarity(std::string_view a, std::string_view b, llm::Gateway& gateway) {
  if (trim(a).empty() || trim(b).empty()) throw PreconditionError("semantic_similarity needs non-empty texts");
  const std::vector<std::string> texts{std::string(a), std::string(b)};
  const auto vectors = gateway.embed(texts);
  return cosine(vectors[0], vectors[1]);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (unsigned char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

const FunctionWordLexicon& FunctionWordLexicon::builtin() {
  static const FunctionWordLexicon lexicon = parse(detail::kBuiltinFunctionWords);
  return lexicon;
}

FunctionWordLexicon FunctionWordLexicon::parse(std::string_view text) {
  FunctionWordLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto word = trim(line);
    if (word.empty() || word.front() == '#') continue;
    std::string w(word);
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lex.index_.emplace(w, lex.words_.size()).second) lex.words_.push_back(std::move(w));
  }
  if (lex.words_.empty()) throw PreconditionError("function-word list is empty");
  return lex;
}

FunctionWordLexicon FunctionWordLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open function-word list " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool FunctionWordLexicon::contains(std::string_view word) const { return index_.contains(std::string(word)); }

std::vector<double> FunctionWordLexicon::profile(std::string_view text) const {
  std::vector<double> freq(words_.size(), 0.0);
  double total = 0;
  for (const auto& token : tokenize(text)) {
    auto it = index_.find(token);
    if (it == index_.end()) continue;
    freq[it->second] += 1.0;
    total += 1.0;
  }
  if (total > 0) {
    for (double& f : freq) f /= total;
  }
  return freq;
}

double style_similarity(std::string_view a, std::string_view b, const FunctionWordLexicon& lexicon) {
  const auto pa = lexicon.profile(a);
  const auto pb = lexicon.profile(b);
  try {
    return cosine(pa, pb);
  } catch (const ZeroVector&) {
    throw NoFunctionWords("style_similarity: a text contains no function words");
  }
}

std::vector<std::size_t> derangement(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw PreconditionError("a derangement needs at least 2 elements");
  std::mt19937_64 rng(seed);
  // Unbiased bounded draw; std distributions are implementation-defined.
  auto below = [&rng](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
      x = rng();
    } while (x >= limit);
    return x % bound;
  };

  std::vector<std::size_t> perm(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[below(i + 1)]);
    bool fixed_point = false;
    for (std::size_t i = 0; i < n && !fixed_point; ++i) fixed_point = perm[i] == i;
    if (!fixed_point) return perm;
  }
}

namespace {

MetricContrast contrast(std::vector<double> matched, std::vector<double> mismatched, std::size_t skipped) {
  MetricContrast c;
  c.skipped = skipped;
  c.matched_mean = stats::mean(matched);
  c.mismatched_mean = stats::mean(mismatched);
  if (matched.size() < 2 || mismatched.size() < 2) return c;
  try {
    const auto r = stats::t_test(matched, mismatched, stats::TestKind::welch);
    c.cohens_d = r.cohens_d;
    c.t_stat = r.t_stat;
    c.p_value = r.p_value;
  } catch (const DegenerateVariance&) {
    // Both conditions constant and different: effect size undefined.
  }
  return c;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << *v;
  return os.str();
}

}  // namespace

SimilarityReport validate_simulator(std::span<const TextPair> matched, std::span<const TextPair> mismatched,
                                    llm::Gateway& gateway, const FunctionWordLexicon& lexicon) {
  if (matched.size() < 2 || mismatched.size() < 2) {
    throw InsufficientData("simulator validation needs at least 2 matched and 2 mismatched pairs");
  }

  struct Scores {
    std::vector<double> semantic;
    std::vector<double> style;
    std::size_t semantic_skipped = 0;
    std::size_t style_skipped = 0;
  };
  auto score_all = [&](std::span<const TextPair> pairs) {
    Scores s;
    for (const auto& p : pairs) {
      try {
        s.semantic.push_back(semantic_similarity(p.reference, p.simulated, gateway));
      } catch (const ZeroVector&) {
        ++s.semantic_skipped;
      } catch (const PreconditionError&) {
        ++s.semantic_skipped;
      }
      try {
        s.style.push_back(style_similarity(p.reference, p.simulated, lexicon));
      } catch (const NoFunctionWords&) {
        ++s.style_skipped;
      }
    }
    return s;
  };

  const auto m = score_all(matched);
  const auto x = score_all(mismatched);
  SimilarityReport report;
  report.n_matched = matched.size();
  report.n_mismatched = mismatched.size();
  report.semantic = contrast(m.semantic, x.semantic, m.semantic_skipped + x.semantic_skipped);
  report.style = contrast(m.style, x.style, m.style_skipped + x.style_skipped);
  return report;
}

std::string SimilarityReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "Metric        matched  mismatched  Cohen's d        t        p\n";
  auto row = [&](const char* name, const MetricContrast& c) {
    os << std::left << std::setw(12) << name << std::right << std::setw(9) << c.matched_mean << std::setw(12)
       << c.mismatched_mean << std::setw(11) << fmt(c.cohens_d) << std::setw(9) << fmt(c.t_stat) << std::setw(9)
       << fmt(c.p_value);
    if (c.skipped) os << "  (" << c.skipped << " pairs skipped)";
    os << '\n';
  };
  row("semantic", semantic);
  row("style", style);
  os << "pairs: " << n_matched << " matched, " << n_mismatched << " mismatched\n";
  return os.str();
}

}  // namespace pairsafe::similarity
