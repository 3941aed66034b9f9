#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nvspec/fitting.hpp"
#include "nvspec/run_config.hpp"

namespace nvspec {

struct NarrowLineReport {
    int orientation = 0;
    int n13c = 0;
    double f_mhz = 0.0;
    double df_db = 0.0;  // MHz/G
    double amplitude = 0.0;
};

struct SimulationResult {
    SpectrumCurve spectrum;
    /// Every above-floor transition, ordered by orientation, n13c, site choice, (from, to).
    std::vector<Transition> transitions;
    /// Magneto-insensitive lines with amplitude >= 1% of the strongest line.
    std::vector<NarrowLineReport> narrow_lines;
    std::string summary_json;
};

SimulationResult simulate(const RunConfig& cfg);

/// Writes the outputs named in cfg.outputs (empty paths are skipped).
void write_simulation(const RunConfig& cfg, const SimulationResult& result);

struct FitRunResult {
    FitResult fit;
    SpectrumCurve curve;  // best-fit model on the data grid
    /// No resolvable resonance: |scale| < 2 sigma_scale, or a singular fit.
    bool no_signal = false;
    std::string report_json;

    /// 0 on convergence with a resolved signal, 2 otherwise.
    int exit_code() const { return fit.converged && !no_signal ? 0 : 2; }
};

/// Fits `data` with the model selected in cfg. Throws InputError when the
/// data do not overlap the configured grid.
FitRunResult fit_spectrum(const RunConfig& cfg, const SpectrumCurve& data);

void write_fit(const RunConfig& cfg, const FitRunResult& result);

/// Static SVG: data (if any) and model curves plus a stick histogram of line weights.
std::string render_svg(const SpectrumCurve* data, const SpectrumCurve& model,
                       const std::vector<Transition>& sticks, const std::string& title);

}  // namespace nvspec
