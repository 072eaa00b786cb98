#pragma once

#include <stdexcept>
#include <string>

namespace rollwave {

// Exit-code classes used by the command line front end.
enum class ErrorClass { domain = 1, numerical = 2, internal = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorClass::domain, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

class NonConvergence : public NumericalError {
public:
    NonConvergence(const std::string& what, double residual)
        : NumericalError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class DegenerateJacobian : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ContinuationStalled : public NumericalError {
public:
    ContinuationStalled(const std::string& what, double last_good)
        : NumericalError(what + " (last good s = " + std::to_string(last_good) + ")"), last_good_(last_good) {}
    double last_good() const noexcept { return last_good_; }

private:
    double last_good_;
};

class NotBracketed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class MaxPointsExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ZeroOnContour : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class WrongRootCount : public NumericalError {
public:
    WrongRootCount(const std::string& what, int winding)
        : NumericalError(what + " (winding " + std::to_string(winding) + ")"), winding_(winding) {}
    int winding() const noexcept { return winding_; }

private:
    int winding_;
};

class DegenerateQuadratic : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace rollwave
