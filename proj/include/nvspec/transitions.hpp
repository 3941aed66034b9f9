#pragma once

#include <span>
#include <vector>

#include "nvspec/spin_core.hpp"

namespace nvspec {

/// Eigen-decomposition of a Hamiltonian; energies ascending (MHz), states are columns.
struct EigenSystem {
    Eigen::VectorXd energies;
    CMatrix states;

    int dimension() const { return static_cast<int>(energies.size()); }
};

/// One allowed microwave transition between eigenstates `from` < `to`.
struct Transition {
    double f_mhz = 0.0;
    double rabi = 0.0;       // |<from| H_mw |to>|, MHz per unit b_mw
    double amplitude = 0.0;  // saturation amplitude
    /// round(max(|d<Sz>|, |d<Sz^2>|)): 0 nuclear, 1 electron, 2 for m_s = -1 <-> +1.
    int delta_ms = 0;
    int from = 0;
    int to = 0;
    int n13c = 0;
    int orientation = 0;
};

/// Default Hermiticity tolerance, relative to max(1, ||H||_F).
inline constexpr double kHermitianTolerance = 1e-10;

/// Throws NotHermitianError when ||H - H^dagger||_F exceeds tol * max(1, ||H||_F).
EigenSystem diagonalize(const CMatrix& h, double tol = kHermitianTolerance);

/// -gamma_e * b_mw * (n . S) padded over the nuclear factors, where
/// n = (sin xi cos zeta, sin xi sin zeta, cos xi) in the NV frame.
CMatrix mw_coupling_operator(double xi, double zeta, double b_mw, int n13c,
                             const PhysicalConstants& constants = {});
/// Same, for an explicit NV-frame polarization direction (normalized internally).
CMatrix mw_coupling_operator(const Vec3& direction, double b_mw, int n13c,
                             const PhysicalConstants& constants = {});

/// The polarization (xi, zeta) of `cfg` is given about [111] like the static
/// field; this is that direction in the local frame of cfg.orientation.
Vec3 mw_polarization_in_nv_frame(const SpinSystemConfig& cfg);

/// 1 - cos[(pi/2) * x / (1 + x)] with x = rabi * alpha.
double saturation_amplitude(double rabi, double alpha);

struct TransitionTableOptions {
    /// Lines with rabi below rabi_floor * max(rabi) are dropped.
    double rabi_floor = 1e-6;
    /// Pairs closer than this (one degenerate level) are skipped.
    double min_frequency = 1e-6;  // MHz
    int n13c = 0;
    int orientation = 0;
};

/// All above-floor transitions i < k between distinct levels, ordered by (from, to).
std::vector<Transition> transition_table(const EigenSystem& eig, const CMatrix& mw_op, double alpha,
                                         const TransitionTableOptions& options = {});

/// <S_z> of every eigenstate.
Eigen::VectorXd electron_sz_expectation(const EigenSystem& eig);
/// <S_z^2> of every eigenstate (weight outside m_s = 0).
Eigen::VectorXd electron_sz2_expectation(const EigenSystem& eig);

/// Microwave drive settings that are not part of the static spin system.
struct MicrowaveDrive {
    double b_mw = 1.0;
    double alpha = 1.0;
    double rabi_floor = 1e-6;
};

/// Convenience: assemble, diagonalize and tabulate one (orientation, n13c) system.
std::vector<Transition> compute_transitions(const SpinSystemConfig& cfg,
                                            const PhysicalConstants& constants = {},
                                            const MicrowaveDrive& drive = {});

struct TransitionSelector {
    int from = 0;
    int to = 0;
};

inline constexpr double kDefaultFieldStep = 0.1;  // G

/// df/dB (MHz/G) of the selected transition by central difference in b_mag.
/// States are followed across the step by maximal overlap with the eigenspace
/// at the shifted field. At b_mag == 0 the line positions are even in the
/// signed field, so the result is 0. Throws TrackingError when an overlap
/// drops below 0.5.
double field_sensitivity(const SpinSystemConfig& cfg, const PhysicalConstants& constants,
                         TransitionSelector selector, double delta_b = kDefaultFieldStep);

/// df/dB for every transition in `lines` (all from the system `cfg`), sharing
/// the three diagonalizations.
std::vector<double> field_sensitivities(const SpinSystemConfig& cfg,
                                        const PhysicalConstants& constants,
                                        std::span<const Transition> lines,
                                        double delta_b = kDefaultFieldStep);

}  // namespace nvspec
