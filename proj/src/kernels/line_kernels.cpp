#include "nvspec/line_kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "line_kernels_impl.hpp"

namespace nvspec::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(NVSPEC_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() {
    if (const char* env = std::getenv("NVSPEC_KERNEL")) {
        const std::string wanted(env);
        if (wanted == "scalar") return Isa::scalar;
        if (wanted == "avx2" && cpu_has_avx2()) return Isa::avx2;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

// -1: automatic; otherwise the forced Isa value.
std::atomic<int> forced{-1};

void check_sizes(std::span<const double> grid, std::span<double> out,
                 std::span<const LineInstance> lines) {
    if (grid.size() != out.size()) throw std::invalid_argument("grid and output sizes differ");
    for (const LineInstance& line : lines) {
        if (line.begin > line.end || line.end > grid.size()) {
            throw std::invalid_argument("line window outside the grid");
        }
    }
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
    static const bool avx2 = cpu_has_avx2();
    return isa == Isa::scalar || avx2;
}

Isa active_isa() {
    const int f = forced.load(std::memory_order_relaxed);
    if (f >= 0) return static_cast<Isa>(f);
    static const Isa detected = detect();
    return detected;
}

void force_isa(std::optional<Isa> isa) {
    if (isa && !isa_available(*isa)) {
        throw std::invalid_argument("instruction set '" + std::string(isa_name(*isa)) +
                                    "' is not available on this machine");
    }
    forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

void accumulate_gaussians(std::span<const double> grid, std::span<double> out,
                          std::span<const LineInstance> lines, Isa isa) {
    check_sizes(grid, out, lines);
#if defined(NVSPEC_HAVE_AVX2_KERNELS)
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        detail::gaussians_avx2(grid.data(), out.data(), lines.data(), lines.size());
        return;
    }
#endif
    detail::gaussians_scalar(grid.data(), out.data(), lines.data(), lines.size());
}

void accumulate_gaussians(std::span<const double> grid, std::span<double> out,
                          std::span<const LineInstance> lines) {
    accumulate_gaussians(grid, out, lines, active_isa());
}

void accumulate_lorentzians(std::span<const double> grid, std::span<double> out,
                            std::span<const LineInstance> lines, Isa isa) {
    check_sizes(grid, out, lines);
#if defined(NVSPEC_HAVE_AVX2_KERNELS)
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        detail::lorentzians_avx2(grid.data(), out.data(), lines.data(), lines.size());
        return;
    }
#endif
    detail::lorentzians_scalar(grid.data(), out.data(), lines.data(), lines.size());
}

void accumulate_lorentzians(std::span<const double> grid, std::span<double> out,
                            std::span<const LineInstance> lines) {
    accumulate_lorentzians(grid, out, lines, active_isa());
}

void exp_array(std::span<const double> in, std::span<double> out, Isa isa) {
    if (in.size() != out.size()) throw std::invalid_argument("exp_array size mismatch");
#if defined(NVSPEC_HAVE_AVX2_KERNELS)
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        detail::exp_avx2(in.data(), out.data(), in.size());
        return;
    }
#endif
    detail::exp_scalar(in.data(), out.data(), in.size());
}

}  // namespace nvspec::kernels
