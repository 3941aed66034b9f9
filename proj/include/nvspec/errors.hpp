#pragma once

#include <stdexcept>
#include <string>

namespace nvspec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix handed to the eigensolver was not Hermitian within tolerance.
class NotHermitianError : public Error {
public:
    NotHermitianError(double asymmetry_norm, double tolerance);
    double asymmetry_norm() const noexcept { return asymmetry_norm_; }

private:
    double asymmetry_norm_;
};

/// An eigenstate could not be followed across a field step.
class TrackingError : public Error {
public:
    TrackingError(int state_index, double best_overlap);
    int state_index() const noexcept { return state_index_; }
    double best_overlap() const noexcept { return best_overlap_; }

private:
    int state_index_;
    double best_overlap_;
};

/// Invalid user input; `where` names the offending key path, flag or file location.
class InputError : public Error {
public:
    InputError(std::string where, const std::string& what);
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

}  // namespace nvspec
