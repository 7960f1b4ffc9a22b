#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace autodml {

// Base class for every failure the library reports on purpose. code() is a
// stable machine-readable tag; callers should switch on it rather than parse
// the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Data layer -----------------------------------------------------------------

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("IoError", m) {}
};
struct MissingColumn : Error {
  explicit MissingColumn(const std::string& m) : Error("MissingColumn", m) {}
};
struct NonNumericCell : Error {
  explicit NonNumericCell(const std::string& m) : Error("NonNumericCell", m) {}
};
struct InvalidBinary : Error {
  explicit InvalidBinary(const std::string& m) : Error("InvalidBinary", m) {}
};
struct InvalidTime : Error {
  explicit InvalidTime(const std::string& m) : Error("InvalidTime", m) {}
};
struct InvalidFoldCount : Error {
  explicit InvalidFoldCount(const std::string& m) : Error("InvalidFoldCount", m) {}
};

// Function spaces ------------------------------------------------------------

struct MissingCovariate : Error {
  explicit MissingCovariate(const std::string& m) : Error("MissingCovariate", m) {}
};
struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& m) : Error("DimensionMismatch", m) {}
};
struct UnsupportedFamily : Error {
  explicit UnsupportedFamily(const std::string& m) : Error("UnsupportedFamily", m) {}
};

// Losses and functionals -----------------------------------------------------

struct MissingNuisance : Error {
  explicit MissingNuisance(const std::string& m) : Error("MissingNuisance", m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error("DomainError", m) {}
};
struct NumericRange : Error {
  explicit NumericRange(const std::string& m) : Error("NumericRange", m) {}
};

// Solvers and estimators -----------------------------------------------------

struct SingularSystem : Error {
  explicit SingularSystem(const std::string& m) : Error("SingularSystem", m) {}
};
struct NewtonDivergence : Error {
  explicit NewtonDivergence(const std::string& m) : Error("NewtonDivergence", m) {}
};
struct Degenerate : Error {
  explicit Degenerate(const std::string& m) : Error("Degenerate", m) {}
};
struct NoBracket : Error {
  explicit NoBracket(const std::string& m) : Error("NoBracket", m) {}
};

// Configuration --------------------------------------------------------------

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("ConfigError", m) {}
};

}  // namespace autodml
