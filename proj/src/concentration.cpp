#include "nvspec/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nvspec/csv_io.hpp"

namespace nvspec {

RamanResult raman_to_concentration(const RamanMeasurement& m, const PhysicalConstants& constants) {
    if (!std::isfinite(m.nu) || !(m.nu > 1200.0 && m.nu < 1400.0)) {
        throw std::invalid_argument("Raman line position must lie in (1200, 1400) cm^-1");
    }
    if (!std::isfinite(m.strain_gpa) || m.strain_gpa < 0.0) {
        throw std::invalid_argument("strain must be a finite value >= 0 GPa");
    }
    if (!std::isfinite(m.systematic_shift)) throw std::invalid_argument("systematic shift must be finite");

    const auto [c0, c1, c2] = constants.raman_coeffs;
    RamanResult r;
    r.strain_shift = m.strain_gpa / constants.strain_raman_coeff;
    r.nu_corrected = m.nu + r.strain_shift + m.systematic_shift;
    r.isotopic_shift = c0 - r.nu_corrected;

    // c2 p^2 + c1 p - s = 0; the form below avoids cancellation for small s.
    const double s = r.isotopic_shift;
    const double disc = c1 * c1 + 4.0 * c2 * s;
    if (disc < 0.0) {
        throw std::invalid_argument("corrected Raman shift " + format_number(r.nu_corrected) +
                                    " cm^-1 has no real concentration");
    }
    const double p = 2.0 * s / (c1 + std::sqrt(disc));
    constexpr double kSlack = 1e-12;
    if (!(p >= -kSlack && p <= 1.0 + kSlack)) {
        throw std::invalid_argument("corrected Raman shift " + format_number(r.nu_corrected) +
                                    " cm^-1 implies 13C fraction " + format_number(p) +
                                    " outside [0, 1]");
    }
    r.p = std::clamp(p, 0.0, 1.0);
    if (r.strain_shift > 0.25 * std::abs(r.isotopic_shift)) {
        r.warnings.push_back("strain correction (" + format_number(r.strain_shift) +
                             " cm^-1) exceeds 25% of the isotopic shift (" +
                             format_number(r.isotopic_shift) + " cm^-1)");
    }
    return r;
}

double concentration_to_raman(double p, double strain_gpa, const PhysicalConstants& constants) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("13C fraction must be in [0, 1]");
    if (!std::isfinite(strain_gpa) || strain_gpa < 0.0) {
        throw std::invalid_argument("strain must be a finite value >= 0 GPa");
    }
    const auto [c0, c1, c2] = constants.raman_coeffs;
    return c0 - c1 * p - c2 * p * p - strain_gpa / constants.strain_raman_coeff;
}

double strain_from_zpl(double zpl_shift_mev, const PhysicalConstants& constants) {
    if (!std::isfinite(zpl_shift_mev) || zpl_shift_mev < 0.0) {
        throw std::invalid_argument("ZPL shift must be a finite value >= 0 meV");
    }
    return zpl_shift_mev / constants.zpl_strain_coeff;
}

double nitrogen_from_ir(double mu, const PhysicalConstants& constants) {
    if (!std::isfinite(mu) || mu < 0.0) {
        throw std::invalid_argument("absorption coefficient must be a finite value >= 0 cm^-1");
    }
    return constants.ir_nitrogen_coeff * mu;
}

double odmr_contrast(double signal, double reference) {
    if (!std::isfinite(signal) || !std::isfinite(reference)) {
        throw std::invalid_argument("signal and reference must be finite");
    }
    if (!(signal + reference > 0.0)) throw std::invalid_argument("signal + reference must be > 0");
    return (signal - reference) / (signal + reference) * 100.0;
}

}  // namespace nvspec
