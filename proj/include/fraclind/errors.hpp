#pragma once

#include <stdexcept>
#include <string>

namespace fraclind {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorClass {
  contract,   ///< caller violated a precondition (shape, hermiticity, domain)
  numerical,  ///< the numerics could not deliver (sector, convergence, overflow)
  config,     ///< malformed scenario configuration
  grid,       ///< series files that cannot be compared
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), cls_(cls), name_(std::move(name)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorClass cls_;
  std::string name_;
};

#define FRACLIND_DEFINE_ERROR(Name, Class)                           \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what)                           \
        : Error(ErrorClass::Class, #Name, what) {}                   \
  }

// contract violations
FRACLIND_DEFINE_ERROR(ShapeMismatch, contract);
FRACLIND_DEFINE_ERROR(NonFinite, contract);
FRACLIND_DEFINE_ERROR(NotHermitian, contract);
FRACLIND_DEFINE_ERROR(LengthMismatch, contract);
FRACLIND_DEFINE_ERROR(DomainError, contract);
FRACLIND_DEFINE_ERROR(InvalidState, contract);

// numerical failures
FRACLIND_DEFINE_ERROR(NonDiagonalizable, numerical);
FRACLIND_DEFINE_ERROR(Overflow, numerical);
FRACLIND_DEFINE_ERROR(FunctionDomain, numerical);
FRACLIND_DEFINE_ERROR(Singular, numerical);
FRACLIND_DEFINE_ERROR(QuadratureNotConverged, numerical);
FRACLIND_DEFINE_ERROR(SpectrumOutsideSector, numerical);
FRACLIND_DEFINE_ERROR(DegenerateNu, numerical);
FRACLIND_DEFINE_ERROR(SectorViolation, numerical);

// scenario plumbing
FRACLIND_DEFINE_ERROR(ConfigError, config);
FRACLIND_DEFINE_ERROR(GridMismatch, grid);

#undef FRACLIND_DEFINE_ERROR

}  // namespace fraclind
