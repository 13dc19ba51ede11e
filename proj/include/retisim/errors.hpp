#pragma once

#include <stdexcept>
#include <string>

namespace retisim {

// Input outside a model's tabulated or physical domain.
class DomainError : public std::domain_error {
  public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Inconsistent configuration detected before a simulation starts.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace retisim
