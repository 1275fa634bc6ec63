#pragma once

#include <stdexcept>
#include <string>

namespace nne {

// All engine failures derive from Error so callers can map them to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidParams : Error {
    explicit InvalidParams(const std::string& msg) : Error("InvalidParams: " + msg) {}
};
struct NonZeroMean : Error {
    explicit NonZeroMean(const std::string& msg) : Error("NonZeroMean: " + msg) {}
};
struct ScaleBelowGrid : Error {
    explicit ScaleBelowGrid(const std::string& msg) : Error("ScaleBelowGrid: " + msg) {}
};
struct ScaleBelowTimeGrid : Error {
    explicit ScaleBelowTimeGrid(const std::string& msg) : Error("ScaleBelowTimeGrid: " + msg) {}
};
// The hard domain constraint of the decomposition lemma: the matrix handed to the
// gamma coefficients left the Frobenius ball of radius 1/2 around the identity.
struct OutsideBall : Error {
    double norm;
    explicit OutsideBall(double frob, const std::string& where)
        : Error("OutsideBall: ||R - Id||_F = " + std::to_string(frob) + " > 0.5 at " + where),
          norm(frob) {}
};
struct UnknownDirection : Error {
    explicit UnknownDirection(const std::string& msg) : Error("UnknownDirection: " + msg) {}
};
struct WindowTooLong : Error {
    explicit WindowTooLong(const std::string& msg) : Error("WindowTooLong: " + msg) {}
};
struct TooFewSamples : Error {
    explicit TooFewSamples(const std::string& msg) : Error("TooFewSamples: " + msg) {}
};
struct UnderResolvedOscillation : Error {
    explicit UnderResolvedOscillation(const std::string& msg)
        : Error("UnderResolvedOscillation: " + msg) {}
};
struct GradientBoundViolated : Error {
    explicit GradientBoundViolated(const std::string& msg)
        : Error("GradientBoundViolated: " + msg) {}
};
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("IoError: " + msg) {}
};
struct FormatVersionMismatch : Error {
    explicit FormatVersionMismatch(const std::string& msg)
        : Error("FormatVersionMismatch: " + msg) {}
};

} // namespace nne
