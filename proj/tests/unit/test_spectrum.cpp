#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "generators.hpp"
#include "nvspec/spectrum.hpp"

using namespace nvspec;

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

// Every occupancy of the nine bath sites times every spin sign, accumulated
// per shift (rounded to 1e-9 MHz).
std::map<long long, double> enumerate_bath(double p, const BathSites& sites) {
    const int n1 = sites.count_group1, n = sites.count_group1 + sites.count_group2;
    std::map<long long, double> dist;
    for (unsigned occ = 0; occ < (1u << n); ++occ) {
        double w_occ = 1.0;
        int k = 0;
        for (int s = 0; s < n; ++s) {
            const bool on = (occ >> s) & 1u;
            w_occ *= on ? p : 1.0 - p;
            k += on;
        }
        if (w_occ == 0.0) continue;
        for (unsigned sign = 0; sign < (1u << n); ++sign) {
            if ((sign & ~occ) != 0) continue;  // signs only on occupied sites
            double shift = 0.0;
            for (int s = 0; s < n; ++s) {
                if (!((occ >> s) & 1u)) continue;
                const double a = s < n1 ? sites.azz_group1 : sites.azz_group2;
                shift += ((sign >> s) & 1u) ? 0.5 * a : -0.5 * a;
            }
            dist[std::llround(shift * 1e9)] += w_occ / static_cast<double>(1u << k);
        }
    }
    return dist;
}

TransitionSet small_set(const SpinSystemConfig& base, std::vector<int> orientations, std::vector<int> n13c) {
    return build_transition_set(base, {}, {}, orientations, n13c);
}

}  // namespace

TEST_CASE("binomial weights, limits") {
    const auto w0 = binomial_weights(0.0);
    CHECK(w0[0] == 1.0);
    CHECK(w0[3] == 0.0);
    const auto w1 = binomial_weights(1.0);
    CHECK(w1[0] == 0.0);
    CHECK(w1[3] == 1.0);
    CHECK_THROWS_AS(binomial_weights(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(binomial_weights(1.1), std::invalid_argument);
}

TEST_CASE("binomial weights at p = 0.276 against exact integer arithmetic") {
    // p = 276/1000: P_n = C(3, n) 276^n 724^(3-n) / 10^9 exactly.
    const long long a = 276, b = 724, c[4] = {1, 3, 3, 1};
    const auto w = binomial_weights(0.276);
    for (int n = 0; n < 4; ++n) {
        long long num = c[n];
        for (int i = 0; i < n; ++i) num *= a;
        for (int i = n; i < 3; ++i) num *= b;
        CHECK(std::abs(w[n] - static_cast<double>(num) / 1e9) < 1e-12);
    }
    CHECK(w[0] == doctest::Approx(0.3795).epsilon(1e-3));
    CHECK(w[1] == doctest::Approx(0.4340).epsilon(1e-3));
    CHECK(w[2] == doctest::Approx(0.1655).epsilon(1e-3));
    CHECK(w[3] == doctest::Approx(0.0210).epsilon(1e-2));
}

TEST_CASE("property: binomial weights sum to one") {
    testgen::Gen gen(301);
    for (int c = 0; c < 1000; ++c) {
        const auto w = binomial_weights(gen.uniform(0.0, 1.0));
        CHECK(std::abs(w[0] + w[1] + w[2] + w[3] - 1.0) < 1e-12);
    }
}

TEST_CASE("bath distribution, trivial cases") {
    const auto empty = bath_shift_distribution(0.0);
    REQUIRE(empty.entries.size() == 1);
    CHECK(empty.entries[0].shift == 0.0);
    CHECK(empty.entries[0].weight == 1.0);

    BathSites one;
    one.count_group1 = 1;
    one.count_group2 = 0;
    const auto single = bath_shift_distribution(1.0, one);
    REQUIRE(single.entries.size() == 2);
    CHECK(single.entries[0].shift == doctest::Approx(-6.85));
    CHECK(single.entries[0].weight == doctest::Approx(0.5));
    CHECK(single.entries[1].shift == doctest::Approx(6.85));
    CHECK(single.entries[1].weight == doctest::Approx(0.5));
}

TEST_CASE("property: bath distribution equals full enumeration") {
    testgen::Gen gen(302);
    for (int c = 0; c < 20; ++c) {
        const double p = c == 0 ? 0.276 : gen.uniform(0.0, 1.0);
        const BathSites sites;
        const auto set = bath_shift_distribution(p, sites);
        const auto oracle = enumerate_bath(p, sites);
        REQUIRE(set.entries.size() == oracle.size());
        auto it = oracle.begin();
        for (const BathEntry& e : set.entries) {
            CHECK(e.shift == doctest::Approx(static_cast<double>(it->first) * 1e-9).epsilon(1e-12));
            CHECK(std::abs(e.weight - it->second) < 1e-12);
            ++it;
        }
        const double var = p * (6 * 6.85 * 6.85 + 3 * 6.4 * 6.4);
        CHECK(std::abs(set.mean()) < 1e-12);
        CHECK(set.variance() == doctest::Approx(var).epsilon(1e-9));
    }
}

TEST_CASE("bath broadening grows with p") {
    double last = -1.0;
    for (double p = 0.0; p <= 1.0; p += 0.05) {
        const double v = bath_shift_distribution(p).variance();
        CHECK(v >= last);
        last = v;
    }
}

TEST_CASE("contours have unit area") {
    const std::vector<double> x = make_grid(-400.0, 400.0, 0.01);
    for (LineContour c : {LineContour::gaussian_width, LineContour::gaussian_stddev, LineContour::lorentzian}) {
        std::vector<double> y;
        for (double f : x) y.push_back(contour_value(c, f - 0.3, 1.7));
        // Lorentzian tails beyond +-400 MHz carry 2/(pi * 470) of the area.
        const double tol = c == LineContour::lorentzian ? 2e-3 : 1e-10;
        CHECK(trapezoid(x, y) == doctest::Approx(1.0).epsilon(tol));
    }
    // Lorentzian width is the FWHM
    CHECK(contour_value(LineContour::lorentzian, 1.5, 3.0) ==
          doctest::Approx(0.5 * contour_value(LineContour::lorentzian, 0.0, 3.0)));
    // sigma of the first form is sqrt(2) times the standard deviation
    CHECK(contour_value(LineContour::gaussian_width, 0.4, std::sqrt(2.0)) ==
          doctest::Approx(contour_value(LineContour::gaussian_stddev, 0.4, 1.0)));
}

TEST_CASE("single rendered line integrates to scale * weight") {
    const std::vector<double> grid = make_grid(2700.0, 3000.0, 0.05);
    for (LineContour c : {LineContour::gaussian_width, LineContour::gaussian_stddev}) {
        LineShapeParams shape;
        shape.sigma0 = 0.5;
        shape.sigma_b = 1.5;
        shape.scale = 3.0;
        shape.contour = c;
        const WeightedLine line{2850.0, 0.7, 1, false};
        std::vector<double> out(grid.size(), 0.0);
        render_lines({&line, 1}, shape, nullptr, {}, grid, out);
        CHECK(trapezoid(grid, out) == doctest::Approx(3.0 * 0.7).epsilon(1e-9));
        // a delta_ms = 1 line uses sigma0 + sigma_b
        const double peak = *std::max_element(out.begin(), out.end());
        CHECK(peak == doctest::Approx(3.0 * 0.7 * contour_value(c, 0.0, 2.0)).epsilon(1e-9));
    }
}

TEST_CASE("bath shifts move delta_ms = 1 lines only") {
    const std::vector<double> grid = make_grid(2700.0, 3000.0, 0.05);
    LineShapeParams shape;
    const BathConfigurationSet bath = bath_shift_distribution(0.5);
    const WeightedLine electron{2850.0, 1.0, 1, false};
    const WeightedLine nuclear{2850.0, 1.0, 0, false};
    std::vector<double> plain(grid.size(), 0.0), shifted(grid.size(), 0.0), nuc_plain(grid.size(), 0.0),
        nuc_bath(grid.size(), 0.0);
    render_lines({&electron, 1}, shape, nullptr, {}, grid, plain);
    render_lines({&electron, 1}, shape, &bath, {}, grid, shifted);
    render_lines({&nuclear, 1}, shape, nullptr, {}, grid, nuc_plain);
    render_lines({&nuclear, 1}, shape, &bath, {}, grid, nuc_bath);
    CHECK(trapezoid(grid, shifted) == doctest::Approx(1.0).epsilon(1e-9));
    // second moment grows by the bath variance
    auto second = [&](const std::vector<double>& y) {
        std::vector<double> m(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) m[i] = (grid[i] - 2850.0) * (grid[i] - 2850.0) * y[i];
        return trapezoid(grid, m);
    };
    CHECK(second(shifted) - second(plain) == doctest::Approx(bath.variance()).epsilon(1e-6));
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(nuc_plain[i] == doctest::Approx(nuc_bath[i]));
}

TEST_CASE("zero scale gives a flat curve at the level") {
    SpinSystemConfig base;
    base.b_mag = 10.0;
    const TransitionSet set = small_set(base, {0, 1, 2, 3}, {0, 1, 2});
    LineShapeParams shape;
    shape.scale = 0.0;
    shape.level = 0.25;
    const auto curve = synthesize_spectrum(set, binomial_weights(0.3), shape, nullptr, make_grid(2700, 3050, 1));
    for (double v : curve.values) CHECK(v == 0.25);
}

TEST_CASE("property: spectrum is linear in scale") {
    testgen::Gen gen(303);
    const std::vector<double> grid = make_grid(2600.0, 3140.0, 1.0);
    for (int c = 0; c < testgen::kCases; ++c) {
        SpinSystemConfig base = gen.spin_config(0);
        base.b_mag = gen.uniform(0.0, 80.0);
        const std::vector<int> orientations{gen.integer(0, 3)};
        const TransitionSet set = small_set(base, orientations, {0, 1});
        LineShapeParams shape;
        shape.level = gen.uniform(-1.0, 1.0);
        shape.sigma0 = gen.uniform(0.3, 5.0);
        shape.sigma_b = gen.uniform(0.0, 2.0);
        shape.contour = static_cast<LineContour>(gen.integer(0, 2));
        SynthesisOptions options;
        options.orientations = orientations;
        options.n13c_mask = {0, 1};
        const double alpha = gen.uniform(-3.0, 3.0);
        const auto w = binomial_weights(gen.uniform(0.0, 1.0));
        const auto bath = bath_shift_distribution(0.1);
        const auto one = synthesize_spectrum(set, w, shape, &bath, grid, options);
        shape.scale = alpha;
        const auto scaled = synthesize_spectrum(set, w, shape, &bath, grid, options);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(scaled.values[i] ==
                  doctest::Approx(shape.level + alpha * (one.values[i] - shape.level)).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("field along [111]: the three off-axis orientations coincide") {
    SpinSystemConfig base;
    base.b_mag = 60.0;
    base.xi = 0.0;  // drive along [111], symmetric under the C3 about it
    const TransitionSet set = small_set(base, {0, 1, 2, 3}, {0, 1, 2});
    const std::vector<double> grid = make_grid(2600.0, 3140.0, 0.5);
    const auto w = binomial_weights(0.276);
    LineShapeParams shape;
    shape.sigma0 = 2.0;
    const auto bath = bath_shift_distribution(0.276);
    auto sub = [&](std::vector<int> o) {
        SynthesisOptions options;
        options.orientations = std::move(o);
        return synthesize_spectrum(set, w, shape, &bath, grid, options).values;
    };
    const auto s0 = sub({0}), s1 = sub({1}), s2 = sub({2}), s3 = sub({3}), all = sub({0, 1, 2, 3});
    double peak = 0.0;
    for (double v : all) peak = std::max(peak, v);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(s2[i] - s1[i]) < 1e-9 * peak);
        CHECK(std::abs(s3[i] - s1[i]) < 1e-9 * peak);
        CHECK(std::abs(all[i] - (s0[i] + 3.0 * s1[i])) < 1e-9 * peak);
    }
}

TEST_CASE("missing isotopologue in the set is an error") {
    SpinSystemConfig base;
    const TransitionSet set = small_set(base, {0}, {0});
    SynthesisOptions options;
    options.orientations = {0};
    options.n13c_mask = {0, 1};
    CHECK_THROWS_AS(synthesize_spectrum(set, binomial_weights(0.1), {}, nullptr, make_grid(2800, 2900, 1), options),
                    std::invalid_argument);
}

TEST_CASE("site averaging weights") {
    CHECK(carbon_site_choices(0).size() == 1);
    CHECK(carbon_site_choices(1).size() == 3);
    CHECK(carbon_site_choices(2).size() == 3);
    CHECK(carbon_site_choices(3).size() == 1);
    SpinSystemConfig base;
    const TransitionSet set = small_set(base, {0}, {0, 1, 2, 3});
    double total[4] = {};
    for (const TransitionGroup& g : set.groups) total[g.n13c] += g.fraction;
    for (double t : total) CHECK(t == doctest::Approx(1.0));
}

TEST_CASE("narrow lines near 2760 MHz at low field") {
    // The symmetric superposition is gone by about 5 G.
    SpinSystemConfig cfg;
    cfg.b_mag = 0.5;
    cfg.n13c = 2;
    const std::vector<double> grid = make_grid(2700.0, 2820.0, 0.05);
    NarrowLineParams params;
    params.enabled = true;
    const NarrowFeature f = narrow_feature_curve(cfg, {}, {}, params, grid);
    REQUIRE(!f.lines.empty());
    bool near_2760 = false;
    for (std::size_t i = 0; i < f.lines.size(); ++i) {
        CHECK(std::abs(f.sensitivity[i]) < 0.3);
        CHECK(f.lines[i].delta_ms != 0);
        near_2760 = near_2760 || std::abs(f.lines[i].f_mhz - 2760.0) < 10.0;
    }
    CHECK(near_2760);

    // threshold 0 selects nothing
    params.threshold = 0.0;
    const NarrowFeature none = narrow_feature_curve(cfg, {}, {}, params, grid);
    CHECK(none.lines.empty());
    for (double v : none.curve.values) CHECK(v == 0.0);
}

TEST_CASE("a field-sensitive line is never narrow") {
    SpinSystemConfig cfg;
    cfg.b_mag = 5.0;
    NarrowLineParams params;
    params.enabled = true;
    const NarrowFeature f = narrow_feature_curve(cfg, {}, {}, params, make_grid(2800.0, 2950.0, 0.1));
    CHECK(f.lines.empty());
}

TEST_CASE("grid and curve validation") {
    const auto g = make_grid(0.0, 1.0, 0.25);
    CHECK(g.size() == 5);
    CHECK(g.back() == doctest::Approx(1.0));
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), std::invalid_argument);
    SpectrumCurve bad{{1.0, 1.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    LineShapeParams shape;
    shape.sigma0 = 0.0;
    CHECK_THROWS_AS(validate(shape), std::invalid_argument);
}
