#pragma once

// Inner loops that paint line contours onto a frequency grid.
//
// Every kernel has a scalar reference implementation; an AVX2/FMA variant is
// selected at runtime when the CPU supports it. Both are exposed so tests can
// check them against each other.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace nvspec::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// True when `isa` was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// The best available instruction set, unless overridden by force_isa() or
/// the NVSPEC_KERNEL environment variable ("scalar" or "avx2").
Isa active_isa();

/// Overrides runtime selection; std::nullopt restores automatic selection.
/// Throws std::invalid_argument if `isa` is not available.
void force_isa(std::optional<Isa> isa);

/// One contour painted onto grid[begin, end).
///   gaussian:   out[j] += amplitude * exp(-((f_j - center) * inv_width)^2)
///   lorentzian: out[j] += amplitude / (1 + ((f_j - center) * inv_width)^2)
struct LineInstance {
    double center = 0.0;
    double amplitude = 0.0;
    double inv_width = 1.0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

void accumulate_gaussians(std::span<const double> grid, std::span<double> out,
                          std::span<const LineInstance> lines);
void accumulate_gaussians(std::span<const double> grid, std::span<double> out,
                          std::span<const LineInstance> lines, Isa isa);

void accumulate_lorentzians(std::span<const double> grid, std::span<double> out,
                            std::span<const LineInstance> lines);
void accumulate_lorentzians(std::span<const double> grid, std::span<double> out,
                            std::span<const LineInstance> lines, Isa isa);

/// out[j] = exp(in[j]). The vector path is accurate to a few ulp and returns 0
/// for in < -708.
void exp_array(std::span<const double> in, std::span<double> out, Isa isa);

}  // namespace nvspec::kernels
