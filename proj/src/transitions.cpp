#include "nvspec/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nvspec/errors.hpp"

namespace nvspec {

namespace {

// Shifted-field eigenvalues closer than this are treated as one eigenspace.
constexpr double kDegeneracyTolerance = 1e-6;  // MHz

struct Cluster {
    Eigen::Index first;
    Eigen::Index last;  // inclusive
    double energy;
};

std::vector<Cluster> degenerate_clusters(const Eigen::VectorXd& energies) {
    std::vector<Cluster> clusters;
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= energies.size(); ++i) {
        if (i == energies.size() || energies(i) - energies(i - 1) > kDegeneracyTolerance) {
            clusters.push_back({start, i - 1, energies.segment(start, i - start).mean()});
            start = i;
        }
    }
    return clusters;
}

/// Energy at the shifted field of the eigenspace best overlapping `base` state `index`.
double tracked_energy(const EigenSystem& base, int index, const EigenSystem& shifted,
                      const std::vector<Cluster>& clusters) {
    const auto v = base.states.col(index);
    const Eigen::VectorXd weights = (shifted.states.adjoint() * v).cwiseAbs2();
    double best = -1.0;
    double best_energy = 0.0;
    for (const Cluster& c : clusters) {
        const double w = weights.segment(c.first, c.last - c.first + 1).sum();
        const bool better = w > best + 1e-9;
        const bool tie = std::abs(w - best) <= 1e-9;
        if (better || (tie && std::abs(c.energy - base.energies(index)) <
                                  std::abs(best_energy - base.energies(index)))) {
            best = std::max(best, w);
            best_energy = c.energy;
        }
    }
    const double overlap = std::sqrt(std::max(best, 0.0));
    if (overlap < 0.5) throw TrackingError(index, overlap);
    return best_energy;
}

SpinSystemConfig with_signed_field(SpinSystemConfig cfg, double signed_b) {
    if (signed_b >= 0.0) {
        cfg.b_mag = signed_b;
        return cfg;
    }
    cfg.b_mag = -signed_b;
    cfg.theta = std::numbers::pi - cfg.theta;
    cfg.phi = cfg.phi + std::numbers::pi;
    return cfg;
}

}  // namespace

EigenSystem diagonalize(const CMatrix& h, double tol) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw std::invalid_argument("diagonalize expects a non-empty square matrix");
    }
    const double asymmetry = (h - h.adjoint()).norm();
    const double allowed = tol * std::max(1.0, h.norm());
    if (!(asymmetry <= allowed)) throw NotHermitianError(asymmetry, allowed);

    const CMatrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
    if (solver.info() != Eigen::Success) throw Error("Hermitian eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix mw_coupling_operator(const Vec3& direction, double b_mw, int n13c,
                             const PhysicalConstants& constants) {
    if (n13c < 0 || n13c > kMaxCarbons) throw std::invalid_argument("n13c must be in 0..3");
    const double norm = direction.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::invalid_argument("microwave polarization direction must be a finite nonzero vector");
    }
    const Vec3 n = direction / norm;
    const SpinOperators s = build_spin_operators(1.0);
    const CMatrix op = -constants.gamma_e * b_mw * (n.x() * s.sx + n.y() * s.sy + n.z() * s.sz);
    return embed_electron(op, 9 << n13c);
}

CMatrix mw_coupling_operator(double xi, double zeta, double b_mw, int n13c,
                             const PhysicalConstants& constants) {
    const Vec3 n(std::sin(xi) * std::cos(zeta), std::sin(xi) * std::sin(zeta), std::cos(xi));
    return mw_coupling_operator(n, b_mw, n13c, constants);
}

Vec3 mw_polarization_in_nv_frame(const SpinSystemConfig& cfg) {
    const Vec3 local0(std::sin(cfg.xi) * std::cos(cfg.zeta), std::sin(cfg.xi) * std::sin(cfg.zeta),
                      std::cos(cfg.xi));
    if (cfg.orientation == 0) return local0;
    return nv_frame(cfg.orientation) * (nv_frame(0).transpose() * local0);
}

double saturation_amplitude(double rabi, double alpha) {
    const double x = rabi * alpha;
    return 1.0 - std::cos(0.5 * std::numbers::pi * x / (1.0 + x));
}

Eigen::VectorXd electron_sz_expectation(const EigenSystem& eig) {
    const int dim = eig.dimension();
    const int nuclear = dim / 3;
    // S_z (x) 1 is diagonal: +1 on the first third, 0 on the middle, -1 on the last.
    Eigen::VectorXd sz(dim);
    for (int j = 0; j < dim; ++j) {
        double acc = 0.0;
        for (int r = 0; r < nuclear; ++r) acc += std::norm(eig.states(r, j));
        for (int r = 2 * nuclear; r < dim; ++r) acc -= std::norm(eig.states(r, j));
        sz(j) = acc;
    }
    return sz;
}

Eigen::VectorXd electron_sz2_expectation(const EigenSystem& eig) {
    const int dim = eig.dimension();
    const int nuclear = dim / 3;
    Eigen::VectorXd sz2(dim);
    for (int j = 0; j < dim; ++j) {
        double acc = 0.0;
        for (int r = 0; r < nuclear; ++r) acc += std::norm(eig.states(r, j));
        for (int r = 2 * nuclear; r < dim; ++r) acc += std::norm(eig.states(r, j));
        sz2(j) = acc;
    }
    return sz2;
}

std::vector<Transition> transition_table(const EigenSystem& eig, const CMatrix& mw_op, double alpha,
                                         const TransitionTableOptions& options) {
    const Eigen::Index dim = eig.energies.size();
    if (mw_op.rows() != dim || mw_op.cols() != dim || eig.states.rows() != dim) {
        throw std::invalid_argument("microwave operator dimension " + std::to_string(mw_op.rows()) +
                                    " does not match eigensystem dimension " + std::to_string(dim));
    }
    const CMatrix coupling = eig.states.adjoint() * mw_op * eig.states;
    const Eigen::MatrixXd rabi = coupling.cwiseAbs();
    // Pairs inside a degenerate level are not transitions.
    auto resolved = [&](Eigen::Index i, Eigen::Index k) {
        return eig.energies(k) - eig.energies(i) >= options.min_frequency;
    };
    double max_rabi = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index k = i + 1; k < dim; ++k)
            if (resolved(i, k)) max_rabi = std::max(max_rabi, rabi(i, k));
    const double floor = options.rabi_floor * max_rabi;
    const Eigen::VectorXd sz = electron_sz_expectation(eig);
    const Eigen::VectorXd sz2 = electron_sz2_expectation(eig);

    std::vector<Transition> lines;
    if (max_rabi == 0.0) return lines;
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index k = i + 1; k < dim; ++k) {
            if (rabi(i, k) < floor || !resolved(i, k)) continue;
            Transition t;
            t.f_mhz = eig.energies(k) - eig.energies(i);
            t.rabi = rabi(i, k);
            t.amplitude = saturation_amplitude(t.rabi, alpha);
            // |<Sz>| misses m_s = 0 <-> (|+1> +- |-1>) lines, <Sz^2> catches them.
            const double dms = std::max(std::abs(sz(k) - sz(i)), std::abs(sz2(k) - sz2(i)));
            t.delta_ms = std::clamp(static_cast<int>(std::lround(dms)), 0, 2);
            t.from = static_cast<int>(i);
            t.to = static_cast<int>(k);
            t.n13c = options.n13c;
            t.orientation = options.orientation;
            lines.push_back(t);
        }
    }
    return lines;
}

std::vector<Transition> compute_transitions(const SpinSystemConfig& cfg,
                                            const PhysicalConstants& constants,
                                            const MicrowaveDrive& drive) {
    const EigenSystem eig = diagonalize(assemble_hamiltonian(cfg, constants));
    const CMatrix mw =
        mw_coupling_operator(mw_polarization_in_nv_frame(cfg), drive.b_mw, cfg.n13c, constants);
    TransitionTableOptions options;
    options.rabi_floor = drive.rabi_floor;
    options.n13c = cfg.n13c;
    options.orientation = cfg.orientation;
    return transition_table(eig, mw, drive.alpha, options);
}

std::vector<double> field_sensitivities(const SpinSystemConfig& cfg,
                                        const PhysicalConstants& constants,
                                        std::span<const Transition> lines, double delta_b) {
    if (!(delta_b > 0.0)) throw std::invalid_argument("field step must be > 0");
    const int dim = cfg.dimension();
    for (const Transition& t : lines) {
        if (t.from < 0 || t.to < 0 || t.from >= dim || t.to >= dim) {
            throw std::invalid_argument("transition state index outside the eigensystem");
        }
    }
    std::vector<double> result(lines.size(), 0.0);
    if (cfg.b_mag == 0.0) {
        validate(cfg);
        return result;
    }

    const EigenSystem base = diagonalize(assemble_hamiltonian(cfg, constants));
    const EigenSystem up =
        diagonalize(assemble_hamiltonian(with_signed_field(cfg, cfg.b_mag + delta_b), constants));
    const EigenSystem down =
        diagonalize(assemble_hamiltonian(with_signed_field(cfg, cfg.b_mag - delta_b), constants));
    const auto up_clusters = degenerate_clusters(up.energies);
    const auto down_clusters = degenerate_clusters(down.energies);

    std::vector<double> e_up(static_cast<std::size_t>(dim), std::nan(""));
    std::vector<double> e_down(static_cast<std::size_t>(dim), std::nan(""));
    auto energy_at = [&](std::vector<double>& cache, const EigenSystem& shifted,
                         const std::vector<Cluster>& clusters, int index) {
        double& slot = cache[static_cast<std::size_t>(index)];
        if (std::isnan(slot)) slot = tracked_energy(base, index, shifted, clusters);
        return slot;
    };
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const Transition& t = lines[n];
        const double f_up = energy_at(e_up, up, up_clusters, t.to) -
                            energy_at(e_up, up, up_clusters, t.from);
        const double f_down = energy_at(e_down, down, down_clusters, t.to) -
                              energy_at(e_down, down, down_clusters, t.from);
        result[n] = (f_up - f_down) / (2.0 * delta_b);
    }
    return result;
}

double field_sensitivity(const SpinSystemConfig& cfg, const PhysicalConstants& constants,
                         TransitionSelector selector, double delta_b) {
    Transition t;
    t.from = selector.from;
    t.to = selector.to;
    return field_sensitivities(cfg, constants, std::span<const Transition>(&t, 1), delta_b).front();
}

}  // namespace nvspec
