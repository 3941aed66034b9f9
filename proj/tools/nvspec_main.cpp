#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nvspec/concentration.hpp"
#include "nvspec/csv_io.hpp"
#include "nvspec/errors.hpp"
#include "nvspec/pipeline.hpp"

namespace {

using nvspec::ConfigOverride;

struct ConfigFlags {
    std::string config;
    std::vector<std::string> sets;
    std::optional<double> b_gauss, theta_rad, phi_rad, p, sigma0_mhz, alpha;
    std::optional<std::string> n13c_mask;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
        app->add_option("--set", sets, "Override a config key, e.g. --set bath.enabled=false");
        app->add_option("--b-gauss", b_gauss, "Field magnitude (G)");
        app->add_option("--theta-rad", theta_rad, "Field polar angle from [111] (rad)");
        app->add_option("--phi-rad", phi_rad, "Field azimuth about [111] (rad)");
        app->add_option("--p", p, "13C fraction");
        app->add_option("--sigma0-mhz", sigma0_mhz, "Base line width (MHz)");
        app->add_option("--alpha", alpha, "Saturation parameter");
        app->add_option("--n13c-mask", n13c_mask, "Isotopologue mask, e.g. 0,1,2,3 or [0,1,2,3]");
    }

    std::vector<ConfigOverride> overrides() const {
        std::vector<ConfigOverride> out;
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw nvspec::InputError("--set " + s, "expected key=value");
            out.push_back({s.substr(0, eq), s.substr(eq + 1)});
        }
        auto num = [&out](const char* key, const std::optional<double>& v) {
            if (v) out.push_back({key, nvspec::format_number(*v)});
        };
        num("b_gauss", b_gauss);
        num("theta_rad", theta_rad);
        num("phi_rad", phi_rad);
        num("p", p);
        num("sigma0_mhz", sigma0_mhz);
        num("alpha", alpha);
        if (n13c_mask) {
            const bool bracketed = !n13c_mask->empty() && n13c_mask->front() == '[';
            out.push_back({"n13c_mask", bracketed ? *n13c_mask : "[" + *n13c_mask + "]"});
        }
        return out;
    }

    nvspec::RunConfig load(std::vector<ConfigOverride> extra = {}) const {
        std::vector<ConfigOverride> all = overrides();
        all.insert(all.end(), extra.begin(), extra.end());
        if (config.empty()) return nvspec::parse_config("", all);
        return nvspec::load_config(config, all);
    }
};

// Re-raises a validation failure as an InputError naming the flag.
template <class F>
auto named(const std::string& flag, F&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw nvspec::InputError(flag, e.what());
    }
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NV-center ODMR spectrum simulation and 13C fraction fitting"};
    app.require_subcommand(1);

    ConfigFlags sim_flags;
    std::string sim_out, sim_transitions, sim_summary, sim_svg;
    CLI::App* sim = app.add_subcommand("simulate", "Simulate a spectrum and its transition table");
    sim_flags.attach(sim);
    sim->add_option("--out", sim_out, "Spectrum CSV");
    sim->add_option("--transitions", sim_transitions, "Transition table CSV");
    sim->add_option("--summary", sim_summary, "Summary JSON");
    sim->add_option("--svg", sim_svg, "Static SVG plot");

    ConfigFlags fit_flags;
    std::string fit_data, fit_model, fit_out, fit_curve, fit_svg, fit_reference;
    CLI::App* fit = app.add_subcommand("fit", "Fit a measured spectrum");
    fit_flags.attach(fit);
    fit->add_option("--data", fit_data, "Spectrum CSV (frequency_mhz,value)")->required();
    fit->add_option("--model", fit_model, "full or gauss7")->check(CLI::IsMember({"full", "gauss7"}));
    fit->add_option("--reference", fit_reference, "Natural-abundance spectrum used to seed the field");
    fit->add_option("--out", fit_out, "Fit report JSON");
    fit->add_option("--curve", fit_curve, "Best-fit curve CSV");
    fit->add_option("--svg", fit_svg, "Static SVG plot");

    double raman_shift = 0.0, raman_systematic = 0.0;
    std::optional<double> raman_strain, raman_zpl;
    CLI::App* raman = app.add_subcommand("raman", "13C fraction from the Raman line position");
    raman->add_option("--shift", raman_shift, "Measured Raman line (cm^-1)")->required();
    auto* strain_opt = raman->add_option("--strain-gpa", raman_strain, "Hydrostatic pressure (GPa)");
    raman->add_option("--zpl-shift-mev", raman_zpl, "NV zero-phonon-line shift (meV)")->excludes(strain_opt);
    raman->add_option("--systematic", raman_systematic, "Instrument offset added to the reading (cm^-1)");

    double ir_mu = 0.0;
    CLI::App* nitrogen = app.add_subcommand("nitrogen", "Donor nitrogen from the 1130 cm^-1 IR absorption");
    nitrogen->add_option("--mu", ir_mu, "Absorption coefficient (cm^-1)")->required();

    double signal = 0.0, reference = 0.0;
    CLI::App* contrast = app.add_subcommand("contrast", "ODMR contrast in percent");
    contrast->add_option("--signal", signal, "Signal S")->required();
    contrast->add_option("--reference", reference, "Reference R")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            nvspec::RunConfig cfg = sim_flags.load();
            if (!sim_out.empty()) cfg.outputs.spectrum = sim_out;
            if (!sim_transitions.empty()) cfg.outputs.transitions = sim_transitions;
            if (!sim_summary.empty()) cfg.outputs.summary = sim_summary;
            if (!sim_svg.empty()) cfg.outputs.svg = sim_svg;
            const nvspec::SimulationResult result = nvspec::simulate(cfg);
            nvspec::write_simulation(cfg, result);
            if (cfg.outputs.summary.empty()) std::cout << result.summary_json;
            return 0;
        }
        if (fit->parsed()) {
            std::vector<ConfigOverride> extra;
            if (!fit_model.empty()) extra.push_back({"model", fit_model});
            if (!fit_reference.empty()) extra.push_back({"reference_data", fit_reference});
            nvspec::RunConfig cfg = fit_flags.load(extra);
            if (!fit_out.empty()) cfg.outputs.report = fit_out;
            if (!fit_curve.empty()) cfg.outputs.curve = fit_curve;
            if (!fit_svg.empty()) cfg.outputs.svg = fit_svg;
            const nvspec::SpectrumCurve data = nvspec::read_spectrum_csv(fit_data);
            const nvspec::FitRunResult result = named(fit_data, [&] { return nvspec::fit_spectrum(cfg, data); });
            nvspec::write_fit(cfg, result);
            if (cfg.outputs.report.empty()) std::cout << result.report_json;
            if (result.exit_code() != 0) {
                std::cerr << "fit: " << (result.no_signal ? "no resolvable resonance" : "did not converge")
                          << " (" << result.fit.status << ")\n";
            }
            return result.exit_code();
        }
        if (raman->parsed()) {
            nvspec::RamanMeasurement m;
            m.nu = raman_shift;
            m.systematic_shift = raman_systematic;
            if (raman_strain) m.strain_gpa = *raman_strain;
            if (raman_zpl) m.strain_gpa = named("--zpl-shift-mev", [&] { return nvspec::strain_from_zpl(*raman_zpl); });
            const std::string flag = m.strain_gpa < 0.0 ? "--strain-gpa" : "--shift";
            const nvspec::RamanResult r = named(flag, [&] { return nvspec::raman_to_concentration(m); });
            print_json({{"p", r.p},
                        {"nu_corrected_cm1", r.nu_corrected},
                        {"isotopic_shift_cm1", r.isotopic_shift},
                        {"strain_shift_cm1", r.strain_shift},
                        {"strain_gpa", m.strain_gpa},
                        {"warnings", r.warnings}});
            for (const std::string& w : r.warnings) std::cerr << "warning: " << w << "\n";
            return 0;
        }
        if (nitrogen->parsed()) {
            print_json({{"mu_cm1", ir_mu}, {"nitrogen_ppm", named("--mu", [&] { return nvspec::nitrogen_from_ir(ir_mu); })}});
            return 0;
        }
        if (contrast->parsed()) {
            print_json({{"contrast_percent", named("--signal/--reference", [&] { return nvspec::odmr_contrast(signal, reference); })}});
            return 0;
        }
    } catch (const nvspec::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
