#include "nvspec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nvspec/csv_io.hpp"
#include "nvspec/errors.hpp"

namespace nvspec {

namespace {

using ordered_json = nlohmann::ordered_json;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(path, "cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw InputError(path, "write failed");
}

MicrowaveDrive drive_from(const RunConfig& cfg) {
    MicrowaveDrive drive;
    drive.b_mw = cfg.model.b_mw;
    drive.alpha = cfg.params.alpha.value;
    drive.rabi_floor = cfg.model.rabi_floor;
    return drive;
}

// Least-squares level and/or scale for model = level + scale * shape.
void seed_level_and_scale(FitParameter& level, FitParameter& scale, bool level_given, bool scale_given,
                          const std::vector<double>& shape, const SpectrumCurve& data) {
    const bool solve_level = !level_given && !level.fixed;
    const bool solve_scale = !scale_given && !scale.fixed;
    if (!solve_level && !solve_scale) return;
    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::Map<const Eigen::VectorXd> y(data.values.data(), n);
    const Eigen::Map<const Eigen::VectorXd> t(shape.data(), n);
    if (solve_level && solve_scale) {
        Eigen::MatrixXd a(n, 2);
        a.col(0).setOnes();
        a.col(1) = t;
        if (t.norm() > 0.0) {
            const Eigen::Vector2d x = a.colPivHouseholderQr().solve(y);
            level.value = x(0);
            scale.value = x(1);
        } else {
            level.value = y.mean();
        }
    } else if (solve_level) {
        level.value = (y - scale.value * t).mean();
    } else if (t.squaredNorm() > 0.0) {
        scale.value = t.dot(y - Eigen::VectorXd::Constant(n, level.value)) / t.squaredNorm();
    }
    level.value = std::clamp(level.value, level.lower, level.upper);
    scale.value = std::clamp(scale.value, scale.lower, scale.upper);
}

SpectrumCurve restrict_to_grid(const SpectrumCurve& data, const GridSpec& grid) {
    validate(data);
    if (data.freqs.back() < grid.start || data.freqs.front() > grid.stop) {
        throw InputError("data", "frequency coverage " + format_number(data.freqs.front()) + ".." +
                                     format_number(data.freqs.back()) +
                                     " MHz does not overlap the grid " + format_number(grid.start) +
                                     ".." + format_number(grid.stop) + " MHz");
    }
    SpectrumCurve out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.freqs[i] < grid.start || data.freqs[i] > grid.stop) continue;
        out.freqs.push_back(data.freqs[i]);
        out.values.push_back(data.values[i]);
    }
    return out;
}

std::string fixed2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

SimulationResult simulate(const RunConfig& cfg) {
    const std::vector<double> grid = make_grid(cfg.grid.start, cfg.grid.stop, cfg.grid.step);
    const FitParams& p = cfg.params;
    NarrowLineParams sensitivity = cfg.model.narrow;
    sensitivity.enabled = true;
    const TransitionSet set =
        build_transition_set(spin_config_from(p, cfg.model), cfg.model.constants, drive_from(cfg),
                             cfg.model.orientations, cfg.model.n13c_mask, sensitivity);

    const LineShapeParams shape = line_shape_from(p, cfg.model);
    const IsotopologueWeights weights = binomial_weights(p.p.value);
    BathConfigurationSet bath;
    if (cfg.model.bath_enabled) bath = bath_shift_distribution(p.p.value, cfg.model.bath_sites);
    SynthesisOptions options;
    options.orientations = cfg.model.orientations;
    options.n13c_mask = cfg.model.n13c_mask;
    options.narrow = cfg.model.narrow;

    SimulationResult result;
    result.spectrum = synthesize_spectrum(set, weights, shape, cfg.model.bath_enabled ? &bath : nullptr,
                                          grid, options);
    double strongest = 0.0;
    for (const TransitionGroup& g : set.groups) {
        result.transitions.insert(result.transitions.end(), g.lines.begin(), g.lines.end());
        for (const Transition& t : g.lines) strongest = std::max(strongest, t.amplitude);
    }
    std::vector<int> by_n13c(kMaxCarbons + 1, 0);
    for (const TransitionGroup& g : set.groups) {
        by_n13c[static_cast<std::size_t>(g.n13c)] += static_cast<int>(g.lines.size());
        for (std::size_t i = 0; i < g.lines.size(); ++i) {
            if (g.narrow[i] == 0 || g.lines[i].amplitude < 0.01 * strongest) continue;
            result.narrow_lines.push_back({g.orientation, g.n13c, g.lines[i].f_mhz, g.sensitivity[i],
                                           g.lines[i].amplitude});
        }
    }

    ordered_json summary;
    summary["transition_count"] = result.transitions.size();
    ordered_json counts = ordered_json::object();
    for (int n : cfg.model.n13c_mask) counts[std::to_string(n)] = by_n13c[static_cast<std::size_t>(n)];
    summary["transition_count_by_n13c"] = counts;
    summary["orientations"] = cfg.model.orientations;
    summary["n13c_mask"] = cfg.model.n13c_mask;
    summary["b_gauss"] = p.b_mag.value;
    summary["theta_rad"] = p.theta.value;
    summary["phi_rad"] = p.phi.value;
    summary["p"] = p.p.value;
    summary["isotopologue_weights"] = std::vector<double>(weights.probability.begin(), weights.probability.end());
    summary["grid"] = {{"start", cfg.grid.start}, {"stop", cfg.grid.stop}, {"step", cfg.grid.step},
                       {"points", grid.size()}};
    summary["bath_enabled"] = cfg.model.bath_enabled;
    summary["narrow_threshold_mhz_per_g"] = cfg.model.narrow.threshold;
    summary["narrow_rendering"] = cfg.model.narrow.enabled;
    ordered_json narrow = ordered_json::array();
    for (const NarrowLineReport& n : result.narrow_lines) {
        narrow.push_back({{"orientation", n.orientation}, {"n13c", n.n13c}, {"f_mhz", n.f_mhz},
                          {"df_db_mhz_per_g", n.df_db}, {"amplitude", n.amplitude}});
    }
    summary["narrow_lines"] = narrow;
    result.summary_json = summary.dump(2) + "\n";
    return result;
}

void write_simulation(const RunConfig& cfg, const SimulationResult& result) {
    if (!cfg.outputs.spectrum.empty()) write_spectrum_csv(cfg.outputs.spectrum, result.spectrum);
    if (!cfg.outputs.transitions.empty()) write_transitions_csv(cfg.outputs.transitions, result.transitions);
    if (!cfg.outputs.summary.empty()) write_text(cfg.outputs.summary, result.summary_json);
    if (!cfg.outputs.svg.empty()) {
        write_text(cfg.outputs.svg, render_svg(nullptr, result.spectrum, result.transitions, "simulated spectrum"));
    }
}

FitRunResult fit_spectrum(const RunConfig& cfg, const SpectrumCurve& raw) {
    const SpectrumCurve data = restrict_to_grid(raw, cfg.grid);
    FitOptions options;
    options.solver.max_iterations = cfg.max_iterations;
    options.systematic_p = cfg.systematic_p;
    const FullModel model(cfg.model);

    FitParams init = cfg.params;
    if (!cfg.reference_data.empty()) {
        FieldEstimateOptions fe;
        fe.zfs = init.d_prime.value;
        fe.gamma_e = cfg.model.constants.gamma_e;
        const FieldEstimate est = estimate_initial_field(read_spectrum_csv(cfg.reference_data), fe);
        init.b_mag.value = std::clamp(est.b_mag, init.b_mag.lower, init.b_mag.upper);
        init.theta.value = std::clamp(est.theta, init.theta.lower, init.theta.upper);
        init.phi.value = std::clamp(est.phi, init.phi.lower, init.phi.upper);
    }
    {
        FitParams unit = init;
        unit.level.value = 0.0;
        unit.scale.value = 1.0;
        seed_level_and_scale(init.level, init.scale, cfg.level_given, cfg.scale_given,
                             model.evaluate(unit, data.freqs), data);
    }

    FitRunResult out;
    if (cfg.fit_model == FitModelKind::full) {
        out.fit = fit_full(data, init, model, options);
        FitParams fitted = init;
        for (std::size_t i = 0; i < FitParams::kCount; ++i) fitted[i].value = out.fit.values[i];
        out.curve = {data.freqs, model.evaluate(fitted, data.freqs)};
    } else {
        Gauss7Params g = gauss7_initial_guess(init, model, data.freqs);
        const Gauss7Config& gc = cfg.gauss7;
        if (gc.f00) g.f00.value = *gc.f00;
        if (gc.f10) g.f10.value = *gc.f10;
        if (gc.f11) g.f11.value = *gc.f11;
        if (gc.f20) g.f20.value = *gc.f20;
        if (gc.f23) g.f23.value = *gc.f23;
        if (gc.sigma) g.sigma.value = *gc.sigma;
        g.offset21 = gc.offset21;
        g.offset22 = gc.offset22;
        Gauss7Params unit = g;
        unit.level.value = 0.0;
        unit.scale.value = 1.0;
        seed_level_and_scale(g.level, g.scale, false, false, gauss7_model(unit, data.freqs), data);
        out.fit = fit_gauss7(data, g, options);
        Gauss7Params fitted = g;
        for (std::size_t i = 0; i < Gauss7Params::kCount; ++i) fitted[i].value = out.fit.values[i];
        out.curve = {data.freqs, gauss7_model(fitted, data.freqs)};
    }

    const auto it = std::find(out.fit.names.begin(), out.fit.names.end(), "scale");
    const bool scale_free = it != out.fit.names.end() && out.fit.fixed[static_cast<std::size_t>(it - out.fit.names.begin())] == 0;
    const double scale = out.fit.value("scale");
    const double scale_sigma = out.fit.sigma("scale");
    out.no_signal = out.fit.singular || (scale_free && !(std::abs(scale) >= 2.0 * scale_sigma));
    out.report_json = fit_report_json(out.fit);
    if (out.no_signal) {
        auto report = nlohmann::ordered_json::parse(out.report_json);
        report["no_signal"] = true;
        out.report_json = report.dump(2) + "\n";
    }
    return out;
}

void write_fit(const RunConfig& cfg, const FitRunResult& result) {
    if (!cfg.outputs.report.empty()) write_text(cfg.outputs.report, result.report_json);
    if (!cfg.outputs.curve.empty()) write_spectrum_csv(cfg.outputs.curve, result.curve);
    if (!cfg.outputs.svg.empty()) {
        write_text(cfg.outputs.svg, render_svg(nullptr, result.curve, {}, "best-fit model"));
    }
}

std::string render_svg(const SpectrumCurve* data, const SpectrumCurve& model,
                       const std::vector<Transition>& sticks, const std::string& title) {
    validate(model);
    constexpr double kWidth = 900.0, kHeight = 420.0, kLeft = 60.0, kRight = 20.0, kTop = 30.0;
    constexpr double kPlotBottom = 300.0, kStickTop = 320.0, kStickBottom = 400.0;
    const double f0 = model.freqs.front();
    const double f1 = model.freqs.back() > f0 ? model.freqs.back() : f0 + 1.0;
    double y0 = *std::min_element(model.values.begin(), model.values.end());
    double y1 = *std::max_element(model.values.begin(), model.values.end());
    if (data) {
        y0 = std::min(y0, *std::min_element(data->values.begin(), data->values.end()));
        y1 = std::max(y1, *std::max_element(data->values.begin(), data->values.end()));
    }
    if (!(y1 > y0)) y1 = y0 + 1.0;
    auto px = [&](double f) { return kLeft + (f - f0) / (f1 - f0) * (kWidth - kLeft - kRight); };
    auto py = [&](double v) { return kPlotBottom - (v - y0) / (y1 - y0) * (kPlotBottom - kTop); };
    auto polyline = [&](const SpectrumCurve& c, const char* color) {
        std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1\" points=\"";
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c.freqs[i] < f0 || c.freqs[i] > f1) continue;
            s += fixed2(px(c.freqs[i])) + "," + fixed2(py(c.values[i])) + " ";
        }
        return s + "\"/>\n";
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n"
        << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 2 << "\" font-size=\"11\">" << fixed2(f0)
        << " MHz</text>\n<text x=\"" << kWidth - kRight - 90 << "\" y=\"" << kHeight - 2
        << "\" font-size=\"11\">" << fixed2(f1) << " MHz</text>\n";
    if (data) svg << polyline(*data, "#1f77b4");
    svg << polyline(model, "#ff7f0e");
    double strongest = 0.0;
    for (const Transition& t : sticks)
        if (t.f_mhz >= f0 && t.f_mhz <= f1) strongest = std::max(strongest, t.amplitude);
    if (strongest > 0.0) {
        for (const Transition& t : sticks) {
            if (t.f_mhz < f0 || t.f_mhz > f1 || t.amplitude <= 0.0) continue;
            const double h = t.amplitude / strongest * (kStickBottom - kStickTop);
            svg << "<line x1=\"" << fixed2(px(t.f_mhz)) << "\" x2=\"" << fixed2(px(t.f_mhz)) << "\" y1=\""
                << fixed2(kStickBottom) << "\" y2=\"" << fixed2(kStickBottom - h)
                << "\" stroke=\"#2ca02c\" stroke-width=\"1\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace nvspec
