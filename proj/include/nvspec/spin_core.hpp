#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace nvspec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Cartesian angular-momentum matrices for one spin, in the |m = s, ..., -s> basis.
struct SpinOperators {
    CMatrix sx;
    CMatrix sy;
    CMatrix sz;

    int dimension() const { return static_cast<int>(sz.rows()); }
};

/// Only s = 1/2 and s = 1 are supported; anything else throws std::invalid_argument.
SpinOperators build_spin_operators(double s);

/// Physical constants of the NV ground state and the auxiliary calculators.
/// Frequencies in MHz, fields in gauss.
struct PhysicalConstants {
    double zfs = 2870.0;                 // D
    double gamma_e = 2.8;                // MHz/G
    double gamma_n = 1.1e-3;             // MHz/G, 14N
    double a_n_parallel = -2.15;
    double a_n_perp = -2.6;
    double quadrupole = -4.95;           // Q
    Vec3 a13c_principal{123.3, 123.3, 204.9};
    double bath_azz_group1 = 13.7;       // six sites
    double bath_azz_group2 = 12.8;       // three sites
    std::array<double, 3> raman_coeffs{1332.8, 34.77, 16.98};  // cm^-1
    double strain_raman_coeff = 0.34;    // GPa per cm^-1
    double zpl_strain_coeff = 5.75;      // meV/GPa
    double ir_nitrogen_coeff = 25.0;     // ppm per cm^-1
};

inline constexpr int kMaxCarbons = 3;
inline constexpr int kOrientationCount = 4;

/// Parameterization of one NV-13C isotopologue in a static field.
///
/// The field is given in spherical angles about the [111] crystal axis (the
/// NV axis of orientation 0); `orientation` selects which of the four NV
/// axes the Hamiltonian is written for.
struct SpinSystemConfig {
    double b_mag = 0.0;     // G
    double theta = 0.0;     // rad, zenith from [111]
    double phi = 0.0;       // rad
    double ex = 0.0;        // MHz
    double ey = 0.0;        // MHz
    double d_prime = 2870.0;  // D + E_z, MHz
    int n13c = 0;
    double xi = 1.5707963267948966;  // MW polarization polar angle, rad
    double zeta = 0.0;               // MW polarization azimuth, rad
    int orientation = 0;
    bool include_nitrogen = true;
    /// Occupied nearest-shell sites; empty means {0, ..., n13c-1}.
    std::vector<int> carbon_sites;

    int dimension() const { return 9 << n13c; }
};

/// Throws std::invalid_argument on out-of-range or non-finite fields.
void validate(const SpinSystemConfig& cfg);

/// Hyperfine tensor (MHz, NV frame) of nearest-shell site 0, 1 or 2.
Mat3 carbon_site_tensor(int site_index, const PhysicalConstants& constants = {});

/// Rotation taking the principal frame of site `site_index` into the NV frame.
Mat3 carbon_site_rotation(int site_index);

/// Unit vector of NV axis `orientation` in the crystal frame.
Vec3 nv_axis(int orientation);

/// Rows are the x, y, z axes of the local frame of `orientation`, in crystal coordinates.
Mat3 nv_frame(int orientation);

/// Expresses a crystal-frame field in the local frame of NV `orientation`.
Vec3 field_in_nv_frame(const Vec3& b_lab, int orientation);

/// Crystal-frame field described by (b_mag, theta, phi) of `cfg`.
Vec3 lab_field(const SpinSystemConfig& cfg);

/// Ground-state Hamiltonian over S (x) I_N (x) I_C1 (x) ... (x) I_Cn, in MHz.
CMatrix assemble_hamiltonian(const SpinSystemConfig& cfg, const PhysicalConstants& constants = {});

/// Electron operator `op` (3x3) padded with identities to `dimension`.
CMatrix embed_electron(const CMatrix& op, int dimension);

/// Kronecker product helper.
CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace nvspec
