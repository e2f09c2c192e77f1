#pragma once

#include <stdexcept>
#include <string>

namespace infodyn {

// Conditioning on a level set that carries no mass.
class DegenerateConditioningError : public std::runtime_error {
 public:
  explicit DegenerateConditioningError(const std::string& what) : std::runtime_error(what) {}
};

// Constraint set empty, inconsistent, or with an infinite infimum.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// Iteration cap reached before the convergence certificate held.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace infodyn
