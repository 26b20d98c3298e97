#pragma once

#include <stdexcept>
#include <string>

namespace homoenergetic {

// Exit-code families used by the command line front end.
enum class ErrorFamily { Config = 2, Numerical = 3, Validation = 4 };

class Error : public std::runtime_error
{
  public:
    Error(ErrorFamily family, const std::string& what)
        : std::runtime_error(what), family_(family)
    {
    }
    ErrorFamily family() const noexcept { return family_; }

  private:
    ErrorFamily family_;
};

struct ConfigError : Error
{
    explicit ConfigError(const std::string& w) : Error(ErrorFamily::Config, w) {}
};

struct NumericalError : Error
{
    explicit NumericalError(const std::string& w) : Error(ErrorFamily::Numerical, w) {}
};

struct ValidationError : Error
{
    explicit ValidationError(const std::string& w) : Error(ErrorFamily::Validation, w) {}
};

//! Argument outside the mathematical domain of an operation.
struct DomainError : NumericalError
{
    explicit DomainError(const std::string& w) : NumericalError("domain error: " + w) {}
};

//! A documented precondition of an operation does not hold.
struct PreconditionError : NumericalError
{
    explicit PreconditionError(const std::string& w) : NumericalError("precondition violated: " + w) {}
};

struct DivergenceError : NumericalError
{
    explicit DivergenceError(const std::string& w) : NumericalError("divergent integral: " + w) {}
};

struct SingularMatrixError : NumericalError
{
    explicit SingularMatrixError(const std::string& w) : NumericalError("singular matrix: " + w) {}
};

struct NonPositiveDefiniteError : NumericalError
{
    explicit NonPositiveDefiniteError(const std::string& w)
        : NumericalError("matrix not positive definite: " + w)
    {
    }
};

struct InsufficientDataError : NumericalError
{
    explicit InsufficientDataError(const std::string& w) : NumericalError("insufficient data: " + w) {}
};

struct StepFailureError : NumericalError
{
    explicit StepFailureError(const std::string& w) : NumericalError("step failure: " + w) {}
};

struct MajorantViolation : NumericalError
{
    explicit MajorantViolation(const std::string& w) : NumericalError("majorant violation: " + w) {}
};

struct FamilyMismatchError : NumericalError
{
    explicit FamilyMismatchError(const std::string& w) : NumericalError("family mismatch: " + w) {}
};

}  // namespace homoenergetic
