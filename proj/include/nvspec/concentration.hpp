#pragma once

#include <string>
#include <vector>

#include "nvspec/spin_core.hpp"

namespace nvspec {

struct RamanMeasurement {
    double nu = 1332.8;            // cm^-1, measured line position
    double strain_gpa = 0.0;       // GPa
    double systematic_shift = 0.0; // cm^-1, amount by which the instrument reads low
};

struct RamanResult {
    double p = 0.0;
    double nu_corrected = 0.0;     // cm^-1
    double isotopic_shift = 0.0;   // cm^-1, 1332.8 - nu_corrected
    double strain_shift = 0.0;     // cm^-1, P / 0.34
    /// Human-readable warnings, e.g. when the strain correction dominates.
    std::vector<std::string> warnings;
};

/// nu_corrected = nu + P / strain_raman_coeff + systematic_shift, then the
/// root in [0, 1] of c2 p^2 + c1 p - (c0 - nu_corrected) = 0. Throws
/// std::invalid_argument when nu is outside (1200, 1400), P < 0, or no root
/// lies in [0, 1].
RamanResult raman_to_concentration(const RamanMeasurement& m, const PhysicalConstants& constants = {});

/// Line position for fraction p under strain P (the inverse of the above
/// without instrument offset): c0 - c1 p - c2 p^2 - P / strain_raman_coeff.
double concentration_to_raman(double p, double strain_gpa = 0.0, const PhysicalConstants& constants = {});

/// P = shift / zpl_strain_coeff (GPa from meV). Throws for negative shifts.
double strain_from_zpl(double zpl_shift_mev, const PhysicalConstants& constants = {});

/// Donor nitrogen (ppm) = ir_nitrogen_coeff * mu. Throws for negative mu.
double nitrogen_from_ir(double mu, const PhysicalConstants& constants = {});

/// (S - R) / (S + R) * 100. Throws when S + R <= 0.
double odmr_contrast(double signal, double reference);

}  // namespace nvspec
