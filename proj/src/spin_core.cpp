#include "nvspec/spin_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

namespace nvspec {

namespace {

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

Mat3 rotation_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0.0,
         s, c, 0.0,
         0.0, 0.0, 1.0;
    return r;
}

void require_orientation(int orientation) {
    if (orientation < 0 || orientation >= kOrientationCount) {
        throw std::invalid_argument("NV orientation index must be in 0..3, got " +
                                    std::to_string(orientation));
    }
}

std::vector<int> occupied_sites(const SpinSystemConfig& cfg) {
    if (cfg.carbon_sites.empty()) {
        std::vector<int> sites(static_cast<std::size_t>(cfg.n13c));
        for (int i = 0; i < cfg.n13c; ++i) sites[static_cast<std::size_t>(i)] = i;
        return sites;
    }
    return cfg.carbon_sites;
}

}  // namespace

SpinOperators build_spin_operators(double s) {
    const bool half = std::abs(s - 0.5) < 1e-12;
    const bool one = std::abs(s - 1.0) < 1e-12;
    if (!half && !one) {
        throw std::invalid_argument("unsupported spin quantum number " + std::to_string(s) +
                                    " (expected 1/2 or 1)");
    }
    const int dim = half ? 2 : 3;
    const double j = half ? 0.5 : 1.0;

    // Raising operator in the |m = j, ..., -j> basis.
    CMatrix raise = CMatrix::Zero(dim, dim);
    for (int col = 1; col < dim; ++col) {
        const double m = j - col;
        raise(col - 1, col) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    const CMatrix lower = raise.adjoint();

    SpinOperators ops;
    ops.sx = 0.5 * (raise + lower);
    ops.sy = Complex(0.0, -0.5) * (raise - lower);
    ops.sz = CMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) ops.sz(i, i) = j - i;
    return ops;
}

void validate(const SpinSystemConfig& cfg) {
    const double values[] = {cfg.b_mag, cfg.theta, cfg.phi, cfg.ex, cfg.ey,
                             cfg.d_prime, cfg.xi, cfg.zeta};
    const char* names[] = {"b_mag", "theta", "phi", "ex", "ey", "d_prime", "xi", "zeta"};
    for (std::size_t i = 0; i < std::size(values); ++i) {
        if (!std::isfinite(values[i])) {
            throw std::invalid_argument(std::string("spin system field '") + names[i] +
                                        "' is not finite");
        }
    }
    if (cfg.b_mag < 0.0) throw std::invalid_argument("b_mag must be >= 0");
    if (cfg.n13c < 0 || cfg.n13c > kMaxCarbons) {
        throw std::invalid_argument("n13c must be in 0..3, got " + std::to_string(cfg.n13c));
    }
    require_orientation(cfg.orientation);
    if (!cfg.carbon_sites.empty()) {
        if (static_cast<int>(cfg.carbon_sites.size()) != cfg.n13c) {
            throw std::invalid_argument("carbon_sites must list exactly n13c sites");
        }
        std::vector<int> sorted = cfg.carbon_sites;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
            sorted.front() < 0 || sorted.back() > 2) {
            throw std::invalid_argument("carbon_sites must be distinct values in 0..2");
        }
    }
}

Mat3 carbon_site_rotation(int site_index) {
    if (site_index < 0 || site_index > 2) {
        throw std::invalid_argument("carbon site index must be in 0..2, got " +
                                    std::to_string(site_index));
    }
    // Tilt of the C-V bond principal axis about x; cos/sin round to 0.2742/0.9617.
    const double tilt = std::atan2(0.9617, -0.2742);
    const double c = std::cos(tilt);
    const double s = std::sin(tilt);
    Mat3 base;
    base << 1.0, 0.0, 0.0,
            0.0, c, s,
            0.0, -s, c;
    return rotation_z(site_index * 2.0 * std::numbers::pi / 3.0) * base;
}

Mat3 carbon_site_tensor(int site_index, const PhysicalConstants& constants) {
    const Mat3 r = carbon_site_rotation(site_index);
    const Mat3 principal = constants.a13c_principal.asDiagonal();
    Mat3 t = r * principal * r.transpose();
    return 0.5 * (t + t.transpose());
}

Vec3 nv_axis(int orientation) {
    return nv_frame(orientation).row(2).transpose();
}

Mat3 nv_frame(int orientation) {
    require_orientation(orientation);
    Mat3 base;
    base.row(0) = Vec3(1.0, 1.0, -2.0).normalized();
    base.row(1) = Vec3(-1.0, 1.0, 0.0).normalized();
    base.row(2) = Vec3(1.0, 1.0, 1.0).normalized();
    // Two-fold rotations about the cube axes map [111] onto the other NV axes.
    static const std::array<Vec3, kOrientationCount> flips{
        Vec3(1, 1, 1), Vec3(-1, -1, 1), Vec3(-1, 1, -1), Vec3(1, -1, -1)};
    const Mat3 q = flips[static_cast<std::size_t>(orientation)].asDiagonal();
    return base * q.transpose();
}

Vec3 field_in_nv_frame(const Vec3& b_lab, int orientation) {
    return nv_frame(orientation) * b_lab;
}

Vec3 lab_field(const SpinSystemConfig& cfg) {
    const Vec3 local(cfg.b_mag * std::sin(cfg.theta) * std::cos(cfg.phi),
                     cfg.b_mag * std::sin(cfg.theta) * std::sin(cfg.phi),
                     cfg.b_mag * std::cos(cfg.theta));
    return nv_frame(0).transpose() * local;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

CMatrix embed_electron(const CMatrix& op, int dimension) {
    return kron(op, identity(dimension / op.rows()));
}

CMatrix assemble_hamiltonian(const SpinSystemConfig& cfg, const PhysicalConstants& constants) {
    validate(cfg);
    const SpinOperators s = build_spin_operators(1.0);
    const SpinOperators c = build_spin_operators(0.5);
    const int n = cfg.n13c;
    const Eigen::Index carbon_dim = Eigen::Index{1} << n;
    const Vec3 b = field_in_nv_frame(lab_field(cfg), cfg.orientation);

    const CMatrix sx2 = s.sx * s.sx;
    const CMatrix sy2 = s.sy * s.sy;
    const CMatrix sz2 = s.sz * s.sz;

    CMatrix electron = cfg.d_prime * sz2 + cfg.ex * (sy2 - sx2) +
                       cfg.ey * (s.sx * s.sy + s.sy * s.sx) +
                       constants.gamma_e * (b.x() * s.sx + b.y() * s.sy + b.z() * s.sz);
    CMatrix h = kron(electron, identity(3 * carbon_dim));

    if (cfg.include_nitrogen) {
        const CMatrix nitrogen = -constants.gamma_n * (b.x() * s.sx + b.y() * s.sy + b.z() * s.sz) +
                                 constants.quadrupole * sz2;
        const CMatrix coupling = constants.a_n_parallel * kron(s.sz, s.sz) +
                                 constants.a_n_perp * (kron(s.sx, s.sx) + kron(s.sy, s.sy));
        h += kron(kron(identity(3), nitrogen) + coupling, identity(carbon_dim));
    }

    const std::vector<int> sites = occupied_sites(cfg);
    const std::array<const CMatrix*, 3> electron_ops{&s.sx, &s.sy, &s.sz};
    const std::array<const CMatrix*, 3> carbon_ops{&c.sx, &c.sy, &c.sz};
    for (int slot = 0; slot < n; ++slot) {
        const Mat3 a = carbon_site_tensor(sites[static_cast<std::size_t>(slot)], constants);
        const CMatrix before = identity(Eigen::Index{1} << slot);
        const CMatrix after = identity(Eigen::Index{1} << (n - slot - 1));
        for (int j = 0; j < 3; ++j) {
            const CMatrix nuclear = kron(identity(3), kron(kron(before, *carbon_ops[j]), after));
            for (int i = 0; i < 3; ++i) {
                if (a(i, j) == 0.0) continue;
                h += a(i, j) * kron(*electron_ops[i], nuclear);
            }
        }
    }
    return h;
}

}  // namespace nvspec
