#include <doctest.h>

#include <cmath>
#include <sstream>

#include "generators.hpp"
#include "nvspec/csv_io.hpp"
#include "nvspec/errors.hpp"
#include "nvspec/run_config.hpp"

using namespace nvspec;

namespace {

std::string where_of(const std::string& text, std::vector<ConfigOverride> overrides = {}) {
    try {
        (void)parse_config(text, overrides);
    } catch (const InputError& e) {
        return e.where();
    }
    return "<no error>";
}

std::string csv_error(const std::string& text) {
    std::istringstream in(text);
    try {
        (void)read_spectrum_csv(in, "data.csv");
    } catch (const InputError& e) {
        return e.where();
    }
    return "<no error>";
}

}  // namespace

TEST_CASE("format_number is shortest round-trip text") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2870.0) == "2870");
    CHECK(format_number(-1.5e-20) == "-1.5e-20");
    testgen::Gen gen(801);
    for (int c = 0; c < testgen::kCases; ++c) {
        const double v = gen.normal() * std::pow(10.0, gen.integer(-30, 30));
        CHECK(std::stod(format_number(v)) == v);
    }
}

TEST_CASE("property: spectrum CSV round trip is exact and deterministic") {
    testgen::Gen gen(802);
    for (int c = 0; c < testgen::kCases; ++c) {
        SpectrumCurve curve;
        double f = gen.uniform(2000.0, 3000.0);
        const int n = gen.integer(1, 200);
        for (int i = 0; i < n; ++i) {
            f += gen.uniform(1e-3, 2.0);
            curve.freqs.push_back(f);
            curve.values.push_back(gen.normal() * 1e3);
        }
        std::ostringstream a, b;
        write_spectrum_csv(a, curve);
        write_spectrum_csv(b, curve);
        CHECK(a.str() == b.str());
        std::istringstream in(a.str());
        const SpectrumCurve back = read_spectrum_csv(in);
        CHECK(back.freqs == curve.freqs);
        CHECK(back.values == curve.values);
    }
}

TEST_CASE("CSV comments and blank lines are skipped") {
    std::istringstream in("# measured\n\nfrequency_mhz,value\n2870,1\n# mid\n2871,0.5\n\n");
    const SpectrumCurve c = read_spectrum_csv(in);
    REQUIRE(c.size() == 2);
    CHECK(c.values[1] == 0.5);
}

TEST_CASE("malformed CSV names the line") {
    CHECK(csv_error("frequency_mhz,value\n2870,1\n2871,abc\n") == "data.csv:3");
    CHECK(csv_error("frequency_mhz,value\n2870,1,4\n") == "data.csv:2");
    CHECK(csv_error("frequency_mhz,value\n2871,1\n2870,1\n") == "data.csv:3");
    CHECK(csv_error("frequency_mhz,value\n2870,nan\n") == "data.csv:2");
    CHECK(csv_error("") != "<no error>");
    CHECK(csv_error("frequency_mhz,value\n") != "<no error>");
}

TEST_CASE("transitions CSV has one row per line") {
    Transition t;
    t.f_mhz = 2800.5;
    t.rabi = 0.7;
    t.amplitude = 0.3;
    t.delta_ms = 1;
    std::ostringstream out;
    write_transitions_csv(out, std::vector<Transition>{t, t});
    std::istringstream in(out.str());
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "orientation,n13c,from,to,f_mhz,rabi,amplitude,delta_ms");
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("empty config gives the defaults") {
    for (const char* text : {"", "{}", "  \n"}) {
        const RunConfig cfg = parse_config(text);
        CHECK(cfg.params.b_mag.value == 0.0);
        CHECK(cfg.params.d_prime.value == 2870.0);
        CHECK(cfg.model.orientations == std::vector<int>{0, 1, 2, 3});
        CHECK(cfg.model.n13c_mask == std::vector<int>{0, 1, 2});
        CHECK(cfg.model.bath_enabled);
        CHECK(cfg.fit_model == FitModelKind::full);
        CHECK(!cfg.level_given);
    }
}

TEST_CASE("config values are read") {
    const RunConfig cfg = parse_config(R"({
        "b_gauss": 200, "theta_rad": 0.1, "p": 0.3, "sigma0_mhz": 2.5,
        "n13c_mask": [0, 1, 2, 3], "orientations": [0],
        "grid": {"start": 2100, "stop": 2500, "step": 0.5},
        "model": "gauss7", "bath": {"enabled": false},
        "fit": {"free": ["p", "b_mag"], "bounds": {"p": [0.1, 0.5]}},
        "scale": 4.0
    })");
    CHECK(cfg.params.b_mag.value == 200.0);
    CHECK(cfg.params.p.value == 0.3);
    CHECK(cfg.params.sigma0.value == 2.5);
    CHECK(cfg.model.n13c_mask == std::vector<int>{0, 1, 2, 3});
    CHECK(cfg.model.orientations == std::vector<int>{0});
    CHECK(cfg.grid.step == 0.5);
    CHECK(cfg.fit_model == FitModelKind::gauss7);
    CHECK(!cfg.model.bath_enabled);
    CHECK(!cfg.params.p.fixed);
    CHECK(cfg.params.p.lower == 0.1);
    CHECK(cfg.params.p.upper == 0.5);
    CHECK(cfg.scale_given);
    CHECK(cfg.params.scale.value == 4.0);
}

TEST_CASE("config errors name the key") {
    CHECK(where_of(R"({"b_gauss": -5})") == "b_gauss");
    CHECK(where_of(R"({"p": 1.5})") == "p");
    CHECK(where_of(R"({"b_gaus": 5})") == "b_gaus");
    CHECK(where_of(R"({"grid": {"step": 0}})") == "grid.step");
    CHECK(where_of(R"({"grid": {"stride": 1}})") == "grid.stride");
    CHECK(where_of(R"({"n13c_mask": [0, 4]})") == "n13c_mask[1]");
    CHECK(where_of(R"({"orientations": [0, 0]})") == "orientations");
    CHECK(where_of(R"({"model": "voigt"})") == "model");
    CHECK(where_of(R"({"b_gauss": "strong"})") == "b_gauss");
    CHECK(where_of(R"({"fit": {"free": ["nope"]}})") == "fit.free[0]");
    CHECK(where_of("{") != "<no error>");
}

TEST_CASE("overrides apply after the document") {
    const RunConfig cfg = parse_config(R"({"b_gauss": 10, "grid": {"step": 1}})",
                                       std::vector<ConfigOverride>{{"b_gauss", "25"}, {"grid.step", "0.25"},
                                                                   {"model", "gauss7"}});
    CHECK(cfg.params.b_mag.value == 25.0);
    CHECK(cfg.grid.step == 0.25);
    CHECK(cfg.fit_model == FitModelKind::gauss7);
    CHECK(where_of("", {{"b_gauss", "-1"}}) == "b_gauss");
    CHECK(where_of("", {{"nothing.here", "1"}}) != "<no error>");
}

TEST_CASE("missing config file") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InputError);
}
