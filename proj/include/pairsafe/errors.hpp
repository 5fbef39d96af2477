#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pairsafe {

// Broad classes used by the CLI to pick an exit code.
enum class ErrorClass { usage, data, backend };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define PAIRSAFE_DEFINE_ERROR(Name, Class)                                        \
  class Name : public Error {                                                     \
   public:                                                                        \
    explicit Name(const std::string& what) : Error(ErrorClass::Class, what) {}   \
  };

// Violated caller precondition (empty input, too-short transcript, ...).
PAIRSAFE_DEFINE_ERROR(PreconditionError, usage)

// rubric-core
PAIRSAFE_DEFINE_ERROR(EmptyConversation, data)

// llm-gateway
PAIRSAFE_DEFINE_ERROR(TransportError, backend)
PAIRSAFE_DEFINE_ERROR(ProviderError, backend)
PAIRSAFE_DEFINE_ERROR(BudgetExceeded, backend)

// judge / seeker structured output
PAIRSAFE_DEFINE_ERROR(SchemaError, data)
PAIRSAFE_DEFINE_ERROR(NotParseable, data)
PAIRSAFE_DEFINE_ERROR(AuditFailed, backend)
PAIRSAFE_DEFINE_ERROR(ExtractionFailed, backend)

// responder / seeker turns
PAIRSAFE_DEFINE_ERROR(FormatError, data)
PAIRSAFE_DEFINE_ERROR(GenerationFailed, backend)

// similarity
PAIRSAFE_DEFINE_ERROR(ZeroVector, data)
PAIRSAFE_DEFINE_ERROR(NoFunctionWords, data)

// calibration, statistics
PAIRSAFE_DEFINE_ERROR(InsufficientData, data)
PAIRSAFE_DEFINE_ERROR(DegenerateVariance, data)

#undef PAIRSAFE_DEFINE_ERROR

// Transcript line that is neither blank nor a "C: "/"T: " turn. Line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : Error(ErrorClass::data, "line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class PairingMismatch : public Error {
 public:
  explicit PairingMismatch(std::vector<std::string> unmatched)
      : Error(ErrorClass::data, describe(unmatched)), unmatched_(std::move(unmatched)) {}
  const std::vector<std::string>& unmatched_ids() const noexcept { return unmatched_; }

 private:
  static std::string describe(const std::vector<std::string>& ids) {
    std::string out = "unpaired source ids:";
    for (const auto& id : ids) out += " " + id;
    return out;
  }
  std::vector<std::string> unmatched_;
};

}  // namespace pairsafe
