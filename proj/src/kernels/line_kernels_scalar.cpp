#include <cmath>

#include "line_kernels_impl.hpp"

namespace nvspec::kernels::detail {

void gaussians_scalar(const double* grid, double* out, const LineInstance* lines, std::size_t count) {
    for (std::size_t n = 0; n < count; ++n) {
        const LineInstance& line = lines[n];
        for (std::size_t j = line.begin; j < line.end; ++j) {
            const double x = (grid[j] - line.center) * line.inv_width;
            out[j] += line.amplitude * std::exp(-x * x);
        }
    }
}

void lorentzians_scalar(const double* grid, double* out, const LineInstance* lines,
                        std::size_t count) {
    for (std::size_t n = 0; n < count; ++n) {
        const LineInstance& line = lines[n];
        for (std::size_t j = line.begin; j < line.end; ++j) {
            const double x = (grid[j] - line.center) * line.inv_width;
            out[j] += line.amplitude / (1.0 + x * x);
        }
    }
}

void exp_scalar(const double* in, double* out, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) out[j] = std::exp(in[j]);
}

}  // namespace nvspec::kernels::detail
