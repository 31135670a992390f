#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace semipert {

enum class ErrorCode {
    Dimension,
    Domain,
    GridAlignment,
    ContractionViolation,
    NoConvergence,
    Configuration,
    Precondition,
    Alignment,
    Construction,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

   private:
    ErrorCode code_;
};

class ContractionViolation : public Error {
   public:
    ContractionViolation(double estimate, const std::string& what)
        : Error(ErrorCode::ContractionViolation, what), estimate(estimate) {}
    double estimate;
};

// Carries the norms of the Neumann terms accumulated before giving up.
class NoConvergence : public Error {
   public:
    NoConvergence(std::vector<double> term_norms, double residual, const std::string& what)
        : Error(ErrorCode::NoConvergence, what), term_norms(std::move(term_norms)), residual(residual) {}
    std::vector<double> term_norms;
    double residual;
};

class PreconditionFailure : public Error {
   public:
    PreconditionFailure(double measured_rate, const std::string& what)
        : Error(ErrorCode::Precondition, what), measured_rate(measured_rate) {}
    double measured_rate;
};

}  // namespace semipert
