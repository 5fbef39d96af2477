#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pairsafe/gateway.hpp"

namespace pairsafe::similarity {

// Throws ZeroVector if either vector has zero norm, PreconditionError on a size mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

double semantic_similarity(std::string_view a, std::string_view b, llm::Gateway& gateway);

// Lowercase, split on anything that is not an ASCII letter, no stemming.
std::vector<std::string> tokenize(std::string_view text);

// Closed-class English words standing in for the LIWC function-word categories.
class FunctionWordLexicon {
 public:
  // The bundled list.
  static const FunctionWordLexicon& builtin();
  // One word per line; blank lines and '#' comments ignored.
  static FunctionWordLexicon parse(std::string_view text);
  static FunctionWordLexicon load(const std::filesystem::path& path);

  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view word) const;
  // Relative frequencies over the lexicon; all zeros when no function word occurs.
  std::vector<double> profile(std::string_view text) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Cosine of function-word relative-frequency vectors. Throws NoFunctionWords when
// either text has none.
double style_similarity(std::string_view a, std::string_view b,
                        const FunctionWordLexicon& lexicon = FunctionWordLexicon::builtin());

// Uniform random permutation of 0..n-1 without fixed points, reproducible from `seed`.
// Throws PreconditionError for n < 2.
std::vector<std::size_t> derangement(std::size_t n, std::uint64_t seed);

struct TextPair {
  std::string reference;  // ground-truth continuation
  std::string simulated;
};

struct MetricContrast {
  double matched_mean = 0;
  double mismatched_mean = 0;
  // Absent when both conditions have zero spread and different means.
  std::optional<double> cohens_d;
  std::optional<double> t_stat;
  std::optional<double> p_value;
  std::size_t skipped = 0;  // pairs without a usable score
};

struct SimilarityReport {
  MetricContrast semantic;
  MetricContrast style;
  std::size_t n_matched = 0;
  std::size_t n_mismatched = 0;

  std::string to_text() const;
};

// Matched vs mismatched contrast for both similarity measures (Cohen's d, Welch t).
// Throws InsufficientData with fewer than 2 pairs per condition.
SimilarityReport validate_simulator(std::span<const TextPair> matched, std::span<const TextPair> mismatched,
                                    llm::Gateway& gateway,
                                    const FunctionWordLexicon& lexicon = FunctionWordLexicon::builtin());

}  // namespace pairsafe::similarity
