#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "nvspec/errors.hpp"
#include "nvspec/transitions.hpp"

using namespace nvspec;

namespace {

// (frequency, summed rabi^2) per distinct line position. Inside a degenerate
// level the individual rabi values depend on the arbitrary eigenbasis; the sum
// does not.
std::vector<std::pair<double, double>> line_multiset(const std::vector<Transition>& lines) {
    std::vector<std::pair<double, double>> raw;
    for (const Transition& t : lines) raw.emplace_back(t.f_mhz, t.rabi * t.rabi);
    std::sort(raw.begin(), raw.end());
    std::vector<std::pair<double, double>> out;
    for (const auto& [f, w] : raw) {
        if (!out.empty() && f - out.back().first < 1e-6) out.back().second += w;
        else out.emplace_back(f, w);
    }
    return out;
}

const Transition* find_line(const std::vector<Transition>& lines, int from, int to) {
    for (const Transition& t : lines)
        if (t.from == from && t.to == to) return &t;
    return nullptr;
}

}  // namespace

TEST_CASE("diagonal input") {
    CMatrix h = CMatrix::Zero(3, 3);
    h(0, 0) = 3.0;
    h(1, 1) = 1.0;
    h(2, 2) = 2.0;
    const EigenSystem e = diagonalize(h);
    CHECK(e.energies(0) == doctest::Approx(1.0));
    CHECK(e.energies(1) == doctest::Approx(2.0));
    CHECK(e.energies(2) == doctest::Approx(3.0));
    CHECK(std::abs(std::abs(e.states(1, 0)) - 1.0) < 1e-14);
    CHECK(std::abs(std::abs(e.states(2, 1)) - 1.0) < 1e-14);
    CHECK(std::abs(std::abs(e.states(0, 2)) - 1.0) < 1e-14);
}

TEST_CASE("non-Hermitian input is rejected") {
    CMatrix h = CMatrix::Identity(3, 3);
    h(0, 1) = 1.0;
    CHECK_THROWS_AS(diagonalize(h), NotHermitianError);
    h(1, 0) = 1.0;
    CHECK_NOTHROW(diagonalize(h));
    CHECK_THROWS_AS(diagonalize(CMatrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("property: reconstruction, residual and unitarity") {
    testgen::Gen gen(201);
    for (int c = 0; c < testgen::kCases; ++c) {
        // Alternate between random dense matrices and physical Hamiltonians.
        const CMatrix h = c % 2 == 0 ? gen.hermitian(9 << gen.integer(0, 2), 1e3)
                                     : assemble_hamiltonian(gen.spin_config());
        const EigenSystem e = diagonalize(h);
        const CMatrix& u = e.states;
        const double scale = std::max(1.0, h.norm());
        CHECK((u * e.energies.cast<Complex>().asDiagonal() * u.adjoint() - h).norm() < 1e-9 * scale);
        CHECK((h * u - u * e.energies.cast<Complex>().asDiagonal()).norm() < 1e-9 * scale);
        CHECK((u.adjoint() * u - CMatrix::Identity(h.rows(), h.rows())).norm() < 1e-10);
        for (Eigen::Index i = 1; i < e.energies.size(); ++i) CHECK(e.energies(i) >= e.energies(i - 1));
    }
}

TEST_CASE("microwave operator, axial and transverse") {
    const SpinOperators s = build_spin_operators(1.0);
    const CMatrix axial = mw_coupling_operator(0.0, 0.0, 1.0, 0);
    CHECK((axial - kron(-2.8 * s.sz, CMatrix::Identity(3, 3))).norm() < 1e-14);
    const double half_pi = 0.5 * std::numbers::pi;
    const CMatrix y = mw_coupling_operator(half_pi, half_pi, 1.0, 1);
    CHECK((y - kron(-2.8 * s.sy, CMatrix::Identity(6, 6))).norm() < 1e-13);
    // Tilted in the y-z plane: S_y sin(a) + S_z cos(a)
    const double a = 0.3;
    const CMatrix tilted = mw_coupling_operator(a, half_pi, 1.0, 0);
    CHECK((tilted - kron(-2.8 * (s.sy * std::sin(a) + s.sz * std::cos(a)), CMatrix::Identity(3, 3))).norm() <
          1e-13);
    CHECK_THROWS_AS(mw_coupling_operator(Vec3::Zero(), 1.0, 0), std::invalid_argument);
}

TEST_CASE("property: microwave operator is Hermitian and traceless") {
    testgen::Gen gen(202);
    for (int c = 0; c < testgen::kCases; ++c) {
        const CMatrix m = mw_coupling_operator(gen.uniform(0.0, 3.2), gen.uniform(0.0, 6.3),
                                               gen.uniform(0.1, 5.0), gen.integer(0, 3));
        CHECK((m - m.adjoint()).norm() < 1e-14);
        CHECK(std::abs(m.trace()) < 1e-12);
    }
}

TEST_CASE("property: coupling sum rule") {
    testgen::Gen gen(203);
    for (int c = 0; c < testgen::kCases; ++c) {
        const SpinSystemConfig cfg = gen.spin_config();
        const EigenSystem e = diagonalize(assemble_hamiltonian(cfg));
        const CMatrix m = mw_coupling_operator(cfg.xi, cfg.zeta, 1.0, cfg.n13c);
        const CMatrix mp = e.states.adjoint() * m * e.states;
        const CMatrix m2 = e.states.adjoint() * m * m * e.states;
        for (Eigen::Index i = 0; i < mp.rows(); ++i) {
            CHECK(mp.row(i).squaredNorm() == doctest::Approx(m2(i, i).real()).epsilon(1e-10));
        }
        // The table reports exactly these matrix elements.
        TransitionTableOptions options;
        options.rabi_floor = 0.0;
        const auto lines = transition_table(e, m, 1.0, options);
        for (const Transition& t : lines) CHECK(t.rabi == doctest::Approx(std::abs(mp(t.from, t.to))));
    }
}

TEST_CASE("property: b_mw rescales rabi linearly, frequencies unchanged") {
    testgen::Gen gen(204);
    for (int c = 0; c < testgen::kCases; ++c) {
        const SpinSystemConfig cfg = gen.spin_config(1);
        const double k = gen.uniform(0.1, 10.0);
        MicrowaveDrive d1, dk;
        dk.b_mw = k;
        const auto a = compute_transitions(cfg, {}, d1);
        const auto b = compute_transitions(cfg, {}, dk);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].f_mhz == b[i].f_mhz);
            CHECK(b[i].rabi == doctest::Approx(k * a[i].rabi).epsilon(1e-10));
        }
    }
}

TEST_CASE("zero field, n13c = 0, no nitrogen: only the 2870 MHz lines") {
    SpinSystemConfig cfg;
    cfg.include_nitrogen = false;
    const auto lines = compute_transitions(cfg);
    REQUIRE(!lines.empty());
    for (const Transition& t : lines) {
        CHECK(t.f_mhz == doctest::Approx(2870.0).epsilon(1e-12));
        CHECK(t.delta_ms == 1);
        CHECK(t.from < t.to);
    }
}

TEST_CASE("carbon site choice does not change the zero-field lines under axial drive") {
    SpinSystemConfig cfg;
    cfg.n13c = 1;
    cfg.xi = 0.0;
    std::vector<std::vector<std::pair<double, double>>> sets;
    for (int site = 0; site < 3; ++site) {
        cfg.carbon_sites = {site};
        sets.push_back(line_multiset(compute_transitions(cfg)));
    }
    for (int site = 1; site < 3; ++site) {
        REQUIRE(sets[site].size() == sets[0].size());
        for (std::size_t i = 0; i < sets[0].size(); ++i) {
            CHECK(sets[site][i].first == doctest::Approx(sets[0][i].first).epsilon(1e-9));
            INFO("f = " << sets[0][i].first);
            CHECK(sets[site][i].second == doctest::Approx(sets[0][i].second).epsilon(1e-7));
        }
    }
}

TEST_CASE("saturation amplitude limits") {
    CHECK(saturation_amplitude(0.0, 1.0) == 0.0);
    CHECK(saturation_amplitude(1e12, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(saturation_amplitude(1.0, 1.0) == doctest::Approx(1.0 - std::cos(std::numbers::pi / 4.0)));
}

TEST_CASE("rabi floor drops numerically zero lines") {
    SpinSystemConfig cfg;
    cfg.b_mag = 20.0;
    MicrowaveDrive none;
    none.rabi_floor = 0.0;
    const auto all = compute_transitions(cfg, {}, none);
    const auto kept = compute_transitions(cfg);
    CHECK(kept.size() < all.size());
    double max_rabi = 0.0;
    for (const Transition& t : all) max_rabi = std::max(max_rabi, t.rabi);
    for (const Transition& t : kept) CHECK(t.rabi >= 1e-6 * max_rabi);
}

TEST_CASE("aligned field: electron lines move at +-gamma_e") {
    SpinSystemConfig cfg;
    cfg.b_mag = 5.0;
    const auto lines = compute_transitions(cfg);
    const auto sens = field_sensitivities(cfg, {}, lines);
    int up = 0, down = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].delta_ms != 1) continue;
        if (lines[i].f_mhz > 2870.0) {
            CHECK(sens[i] == doctest::Approx(2.8).epsilon(1e-3));
            ++up;
        } else {
            CHECK(sens[i] == doctest::Approx(-2.8).epsilon(1e-3));
            ++down;
        }
    }
    CHECK(up >= 3);
    CHECK(down >= 3);
    const Transition* t = find_line(lines, lines[0].from, lines[0].to);
    REQUIRE(t != nullptr);
    CHECK(field_sensitivity(cfg, {}, {t->from, t->to}) == doctest::Approx(sens[0]).epsilon(1e-12));
}

TEST_CASE("field sensitivity is zero at zero field") {
    SpinSystemConfig cfg;
    cfg.n13c = 1;
    const auto lines = compute_transitions(cfg);
    for (double s : field_sensitivities(cfg, {}, lines)) CHECK(s == 0.0);
}

TEST_CASE("delta m_s classification") {
    SpinSystemConfig cfg;
    cfg.b_mag = 100.0;
    const auto lines = compute_transitions(cfg);
    int electron = 0;
    for (const Transition& t : lines) {
        if (t.f_mhz > 1000.0) {
            CHECK(t.delta_ms == 1);
            ++electron;
        } else if (std::abs(t.f_mhz - 560.0) < 20.0) {
            CHECK(t.delta_ms == 2);  // m_s = -1 <-> +1
        } else {
            CHECK(t.delta_ms == 0);
        }
    }
    CHECK(electron > 0);
}
