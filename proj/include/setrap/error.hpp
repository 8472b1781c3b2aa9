#pragma once

#include <stdexcept>
#include <string>

namespace setrap {

// Input outside the domain of an operation (bad parameters, invalid angles,
// unsupported order, ...). The CLI maps these to exit code 2.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Evaluation too close to an electrode edge or on the electrode plane, where
// the gapless-plane fields diverge or are discontinuous.
class SingularityError : public DomainError {
 public:
  explicit SingularityError(const std::string& what) : DomainError(what) {}
};

// A numerical procedure did not produce the structure it guarantees (root
// counts, convergence). Carries the diagnostic in what().
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace setrap
