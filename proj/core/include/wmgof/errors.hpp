#pragma once

#include <stdexcept>
#include <string>

namespace wmgof {

// Root of every error the library throws. `kind()` is a stable token used in
// machine-readable CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error("convergence", what) {}
};

class NonFinite : public Error {
 public:
  explicit NonFinite(const std::string& what) : Error("non_finite", what) {}
};

class TooFewObservations : public Error {
 public:
  explicit TooFewObservations(const std::string& what)
      : Error("too_few_observations", what) {}
};

class AllStartsFailed : public Error {
 public:
  explicit AllStartsFailed(const std::string& what)
      : Error("all_starts_failed", what) {}
};

class SingularInformation : public Error {
 public:
  explicit SingularInformation(const std::string& what)
      : Error("singular_information", what) {}
};

class EigenSolverFailure : public Error {
 public:
  explicit EigenSolverFailure(const std::string& what)
      : Error("eigen_solver", what) {}
};

class QuadratureFailure : public Error {
 public:
  explicit QuadratureFailure(const std::string& what)
      : Error("quadrature", what) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what)
      : Error("degenerate_input", what) {}
};

class StudyAborted : public Error {
 public:
  explicit StudyAborted(const std::string& what)
      : Error("study_aborted", what) {}
};

}  // namespace wmgof
