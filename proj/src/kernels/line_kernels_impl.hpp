#pragma once

#include <cstddef>

#include "nvspec/line_kernels.hpp"

namespace nvspec::kernels::detail {

void gaussians_scalar(const double* grid, double* out, const LineInstance* lines, std::size_t count);
void lorentzians_scalar(const double* grid, double* out, const LineInstance* lines, std::size_t count);
void exp_scalar(const double* in, double* out, std::size_t n);

#if defined(NVSPEC_HAVE_AVX2_KERNELS)
void gaussians_avx2(const double* grid, double* out, const LineInstance* lines, std::size_t count);
void lorentzians_avx2(const double* grid, double* out, const LineInstance* lines, std::size_t count);
void exp_avx2(const double* in, double* out, std::size_t n);
#endif

}  // namespace nvspec::kernels::detail
