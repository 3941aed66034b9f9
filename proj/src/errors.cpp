#include "nvspec/errors.hpp"

#include <cstdio>

namespace nvspec {

namespace {
std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}
}  // namespace

NotHermitianError::NotHermitianError(double asymmetry_norm, double tolerance)
    : Error("matrix is not Hermitian: ||H - H^dagger|| = " + format_double(asymmetry_norm) +
            " exceeds tolerance " + format_double(tolerance)),
      asymmetry_norm_(asymmetry_norm) {}

TrackingError::TrackingError(int state_index, double best_overlap)
    : Error("lost track of eigenstate " + std::to_string(state_index) +
            " across the field step (best overlap " + format_double(best_overlap) + " < 0.5)"),
      state_index_(state_index),
      best_overlap_(best_overlap) {}

InputError::InputError(std::string where, const std::string& what)
    : Error(where + ": " + what), where_(std::move(where)) {}

}  // namespace nvspec
