#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "generators.hpp"
#include "nvspec/line_kernels.hpp"
#include "nvspec/spectrum.hpp"

using namespace nvspec;
using namespace nvspec::kernels;

namespace {

struct IsaGuard {
    ~IsaGuard() { force_isa(std::nullopt); }
};

std::vector<LineInstance> random_lines(testgen::Gen& gen, std::size_t grid_size, int count) {
    std::vector<LineInstance> lines;
    for (int i = 0; i < count; ++i) {
        LineInstance l;
        l.center = gen.uniform(2600.0, 3140.0);
        l.amplitude = gen.uniform(-2.0, 2.0);
        l.inv_width = 1.0 / gen.uniform(0.05, 20.0);
        const auto a = static_cast<std::size_t>(gen.integer(0, static_cast<int>(grid_size)));
        const auto b = static_cast<std::size_t>(gen.integer(0, static_cast<int>(grid_size)));
        l.begin = std::min(a, b);
        l.end = std::max(a, b);
        lines.push_back(l);
    }
    return lines;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("scalar kernel matches the written formula") {
    const std::vector<double> grid{0.0, 0.5, 1.0, 1.5};
    std::vector<double> g(4, 0.0), l(4, 0.0);
    const LineInstance line{0.5, 2.0, 2.0, 0, 4};
    accumulate_gaussians(grid, g, {&line, 1}, Isa::scalar);
    accumulate_lorentzians(grid, l, {&line, 1}, Isa::scalar);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double u = (grid[j] - 0.5) * 2.0;
        CHECK(g[j] == doctest::Approx(2.0 * std::exp(-u * u)).epsilon(1e-15));
        CHECK(l[j] == doctest::Approx(2.0 / (1.0 + u * u)).epsilon(1e-15));
    }
}

TEST_CASE("line windows are respected") {
    const std::vector<double> grid = make_grid(0.0, 10.0, 1.0);
    for (Isa isa : {Isa::scalar, Isa::avx2}) {
        if (!isa_available(isa)) continue;
        std::vector<double> out(grid.size(), 0.0);
        const LineInstance line{5.0, 1.0, 0.1, 3, 8};
        accumulate_gaussians(grid, out, {&line, 1}, isa);
        for (std::size_t j = 0; j < grid.size(); ++j) CHECK((out[j] != 0.0) == (j >= 3 && j < 8));
    }
    std::vector<double> out(grid.size(), 0.0);
    const LineInstance bad{5.0, 1.0, 0.1, 3, 20};
    CHECK_THROWS_AS(accumulate_gaussians(grid, out, {&bad, 1}), std::invalid_argument);
    std::vector<double> short_out(3, 0.0);
    CHECK_THROWS_AS(accumulate_gaussians(grid, short_out, {}), std::invalid_argument);
}

TEST_CASE("property: AVX2 kernels agree with the scalar reference") {
    if (!isa_available(Isa::avx2)) {
        MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
        return;
    }
    testgen::Gen gen(401);
    for (int c = 0; c < testgen::kCases; ++c) {
        const std::vector<double> grid = make_grid(2600.0, 2600.0 + gen.uniform(1.0, 540.0), gen.uniform(0.05, 1.0));
        const auto lines = random_lines(gen, grid.size(), gen.integer(1, 40));
        std::vector<double> gs(grid.size(), 0.0), gv(grid.size(), 0.0), ls(grid.size(), 0.0), lv(grid.size(), 0.0);
        accumulate_gaussians(grid, gs, lines, Isa::scalar);
        accumulate_gaussians(grid, gv, lines, Isa::avx2);
        accumulate_lorentzians(grid, ls, lines, Isa::scalar);
        accumulate_lorentzians(grid, lv, lines, Isa::avx2);
        const double gscale = std::max(1.0, max_abs(gs)), lscale = std::max(1.0, max_abs(ls));
        for (std::size_t j = 0; j < grid.size(); ++j) {
            CHECK(std::abs(gs[j] - gv[j]) < 1e-13 * gscale);
            CHECK(std::abs(ls[j] - lv[j]) < 1e-13 * lscale);
        }
    }
}

TEST_CASE("vector exp accuracy") {
    if (!isa_available(Isa::avx2)) return;
    std::vector<double> in;
    for (double x = -745.0; x <= 709.0; x += 0.37) in.push_back(x);
    in.push_back(0.0);
    in.push_back(-708.5);
    in.push_back(std::numeric_limits<double>::lowest());
    std::vector<double> ref(in.size()), vec(in.size());
    exp_array(in, ref, Isa::scalar);
    exp_array(in, vec, Isa::avx2);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] < -708.0) {
            CHECK(vec[i] == 0.0);
            continue;
        }
        const double want = std::exp(in[i]);
        CHECK(std::abs(vec[i] - want) <= 4.0 * std::numeric_limits<double>::epsilon() * want);
    }
    CHECK(vec[vec.size() - 3] == 1.0);
}

TEST_CASE("runtime selection and override") {
    IsaGuard guard;
    const Isa automatic = active_isa();
    CHECK(isa_available(automatic));
    force_isa(Isa::scalar);
    CHECK(active_isa() == Isa::scalar);
    if (!isa_available(Isa::avx2)) CHECK_THROWS_AS(force_isa(Isa::avx2), std::invalid_argument);
    force_isa(std::nullopt);
    CHECK(active_isa() == automatic);
    CHECK(isa_name(Isa::scalar) == "scalar");
    CHECK(isa_name(Isa::avx2) == "avx2");
}

TEST_CASE("synthesized spectrum does not depend on the kernel") {
    IsaGuard guard;
    SpinSystemConfig base;
    base.b_mag = 30.0;
    base.theta = 0.4;
    const TransitionSet set = build_transition_set(base, {}, {}, std::vector<int>{0, 1, 2, 3}, std::vector<int>{0, 1, 2});
    const auto bath = bath_shift_distribution(0.3);
    const std::vector<double> grid = make_grid(2600.0, 3140.0, 0.2);
    LineShapeParams shape;
    force_isa(Isa::scalar);
    const auto a = synthesize_spectrum(set, binomial_weights(0.3), shape, &bath, grid);
    if (!isa_available(Isa::avx2)) return;
    force_isa(Isa::avx2);
    const auto b = synthesize_spectrum(set, binomial_weights(0.3), shape, &bath, grid);
    const double scale = max_abs(a.values);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) < 1e-12 * scale);
}
