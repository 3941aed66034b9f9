#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nvspec/full_model.hpp"
#include "nvspec/least_squares.hpp"
#include "nvspec/spectrum.hpp"

namespace nvspec {

enum class FitModelKind { full, gauss7 };

std::string_view model_name(FitModelKind kind);

struct FitResult {
    FitModelKind model = FitModelKind::full;
    std::vector<std::string> names;
    std::vector<double> values;
    /// 1-sigma from the covariance; NaN for fixed parameters or a singular fit.
    std::vector<double> sigmas;
    std::vector<char> fixed;
    std::vector<double> lower;
    std::vector<double> upper;
    /// Covariance of the free parameters, in the order of free_names.
    Eigen::MatrixXd covariance;
    std::vector<std::string> free_names;
    double residual_norm = 0.0;  // sum of squared residuals
    int iterations = 0;
    bool converged = false;
    std::string status;
    std::vector<double> cost_history;
    bool singular = false;
    std::optional<std::string> degenerate_parameter;
    double systematic_p = 0.005;

    double value(std::string_view name) const;
    double sigma(std::string_view name) const;
    /// sqrt(sigma_p^2 + systematic_p^2); NaN when sigma_p is unavailable or
    /// there is no p.
    double p_total_uncertainty() const;
};

struct FitOptions {
    LeastSquaresOptions solver;
    double systematic_p = 0.005;
};

/// Least-squares fit of the full forward model. The model instance keeps its
/// transition cache between calls.
FitResult fit_full(const SpectrumCurve& data, const FitParams& init, const FullModel& model,
                   const FitOptions& options = {});
FitResult fit_full(const SpectrumCurve& data, const FitParams& init,
                   const FullModelSettings& settings = {}, const FitOptions& options = {});

/// Seven Gaussians: one n13c = 0 line, two n13c = 1 lines, four n13c = 2
/// lines of which f21 = f00 + offset21 and f22 = f00 + offset22 are tied.
struct Gauss7Params {
    static constexpr std::size_t kCount = 9;
    static constexpr std::array<std::string_view, kCount> kNames{
        "level", "scale", "sigma", "p", "f00", "f10", "f11", "f20", "f23"};

    FitParameter level{0.0, false};
    FitParameter scale{1.0, false};
    FitParameter sigma{1.0, false, 1e-3};
    FitParameter p{0.011, false, 0.0, 1.0};
    FitParameter f00{2870.0, false};
    FitParameter f10{2800.0, false};
    FitParameter f11{2940.0, false};
    FitParameter f20{2750.0, false};
    FitParameter f23{2990.0, false};
    double offset21 = 2.0;   // MHz
    double offset22 = 31.0;  // MHz

    FitParameter& operator[](std::size_t i);
    const FitParameter& operator[](std::size_t i) const;
    static std::size_t index_of(std::string_view name);
    int free_count() const;
    /// Line centers (f00, f10, f11, f20, f21, f22, f23).
    std::array<double, 7> centers() const;
};

void validate(const Gauss7Params& params);

/// b + A * sum_n sum_k P_n(p) / 2^(n+1) * exp(-(f - f_nk)^2 / sigma^2) / (sqrt(pi) sigma).
std::vector<double> gauss7_model(const Gauss7Params& params, std::span<const double> grid);

FitResult fit_gauss7(const SpectrumCurve& data, const Gauss7Params& init,
                     const FitOptions& options = {});

/// Seven-Gaussian starting point derived from the full model at `full`:
/// line groups of each isotopologue inside the grid become the free centers,
/// and sigma absorbs the bath broadening.
Gauss7Params gauss7_initial_guess(const FitParams& full, const FullModel& model,
                                  std::span<const double> grid);

struct FieldEstimateOptions {
    double zfs = 2870.0;      // MHz
    double gamma_e = 2.8;     // MHz/G
    /// Peaks lower than this fraction of the tallest one are ignored.
    double peak_fraction = 0.2;
    /// Peaks closer than this are one resonance (nitrogen hyperfine triplet).
    double merge_distance = 6.0;  // MHz
};

struct DetectedPeak {
    double f_mhz = 0.0;
    double height = 0.0;
    double hwhm = 0.0;
};

struct FieldEstimate {
    double b_mag = 0.0;   // G
    double theta = 0.0;   // rad, in [0, pi/2]
    double phi = 0.0;     // rad, in [0, 2pi/3)
    double b_uncertainty = 0.0;  // G
    /// RMS distance between detected peaks and predicted lines, both ways.
    double rms_mismatch = 0.0;  // MHz
    /// Set when the direction is undetermined (single resonance at zero field).
    bool angular_uncertainty = false;
    std::vector<DetectedPeak> peaks;
};

/// Resonances in a natural-abundance spectrum (peaks or dips; the sign is
/// taken from the larger excursion from the median).
std::vector<DetectedPeak> detect_peaks(const SpectrumCurve& spectrum, const FieldEstimateOptions& options = {});

/// Matches detected resonances to the four-orientation n13c = 0 electron
/// model: coarse grid over (B, theta, phi), then least-squares refinement.
/// A single resonance returns B = 0 with angular_uncertainty set. Throws
/// InputError when no resonance is found.
FieldEstimate estimate_initial_field(const SpectrumCurve& reference,
                                     const FieldEstimateOptions& options = {});

/// Fit report as pretty-printed JSON:
/// {model, converged, iterations, residual_norm, params: [...], p_total_uncertainty}.
std::string fit_report_json(const FitResult& result);

}  // namespace nvspec
