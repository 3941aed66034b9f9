#pragma once

#include <array>
#include <span>
#include <vector>

#include "nvspec/spin_core.hpp"
#include "nvspec/transitions.hpp"

namespace nvspec {

/// Probabilities of 0..3 nearest-shell 13C for a 13C fraction p.
struct IsotopologueWeights {
    double p = 0.0;
    std::array<double, 4> probability{1.0, 0.0, 0.0, 0.0};

    double operator[](int n13c) const { return probability.at(static_cast<std::size_t>(n13c)); }
};

/// P0 = (1-p)^3, P1 = 3p(1-p)^2, P2 = 3p^2(1-p), P3 = p^3. Throws for p outside [0, 1].
IsotopologueWeights binomial_weights(double p);

enum class LineContour {
    gaussian_width,   // exp(-x^2/sigma^2) / (sqrt(pi) sigma)
    gaussian_stddev,  // exp(-x^2/(2 sigma^2)) / (sqrt(2 pi) sigma)
    lorentzian,       // sigma is the FWHM
};

/// What a transition contributes before isotopologue weighting.
enum class LineWeighting {
    saturation,    // saturation amplitude
    rabi_squared,  // rabi^2
};

struct LineShapeParams {
    double sigma0 = 1.0;   // MHz, width of delta_ms = 0 lines
    double sigma_b = 0.0;  // MHz per unit delta_ms
    double level = 0.0;    // offset b
    double scale = 1.0;    // total amplitude A; negative values render dips
    LineContour contour = LineContour::gaussian_width;
    LineWeighting weighting = LineWeighting::saturation;

    double width(int delta_ms) const { return sigma0 + delta_ms * sigma_b; }
};

/// Throws std::invalid_argument unless sigma0 > 0, sigma_b >= 0 and all fields are finite.
void validate(const LineShapeParams& shape);

/// Unit-area contour evaluated at offset x (MHz) from the line center.
double contour_value(LineContour contour, double x, double width);

struct SpectrumCurve {
    std::vector<double> freqs;   // MHz, strictly increasing
    std::vector<double> values;

    std::size_t size() const { return freqs.size(); }
};

/// Throws std::invalid_argument on unequal lengths, non-finite entries or a
/// grid that is not strictly increasing.
void validate(const SpectrumCurve& curve);

/// start, start + step, ... up to stop (inclusive within step/1000).
std::vector<double> make_grid(double start, double stop, double step);

/// Outer-shell sites contributing longitudinal bath shifts.
struct BathSites {
    int count_group1 = 6;
    int count_group2 = 3;
    double azz_group1 = 13.7;  // MHz
    double azz_group2 = 12.8;  // MHz
};

struct BathEntry {
    double shift = 0.0;   // MHz, for a delta_ms = 1 line
    double weight = 0.0;
};

/// Distinct bath shifts and their probabilities, sorted by shift.
struct BathConfigurationSet {
    std::vector<BathEntry> entries;

    double mean() const;
    double variance() const;
};

/// Shifts closer than this are merged into one entry (weighted mean position).
inline constexpr double kBathMergeTolerance = 0.01;  // MHz

/// Each site is occupied with probability p and then contributes +-azz/2 with
/// probability 1/2 each.
BathConfigurationSet bath_shift_distribution(double p, const BathSites& sites = {});

/// Narrow-line rendering of magneto-insensitive transitions.
struct NarrowLineParams {
    bool enabled = false;
    double threshold = 0.3;  // MHz/G, |df/dB| below this selects a line
    double fwhm = 3.0;       // MHz, Lorentzian
};

/// Transitions of one orientation and one choice of occupied carbon sites.
struct TransitionGroup {
    int orientation = 0;
    int n13c = 0;
    std::vector<int> carbon_sites;
    /// Share of the n13c isotopologue represented by this site choice.
    double fraction = 1.0;
    std::vector<Transition> lines;
    /// Per line; empty means no line is narrow.
    std::vector<char> narrow;
    std::vector<double> sensitivity;
};

struct TransitionSet {
    std::vector<TransitionGroup> groups;

    bool contains(int orientation, int n13c) const;
    std::size_t line_count() const;
};

/// Site choices of n13c carbons among the three nearest-shell sites, equally weighted.
std::vector<std::vector<int>> carbon_site_choices(int n13c);

/// Diagonalizes `base` for every requested orientation and n13c and every
/// site choice. base.orientation, base.n13c and base.carbon_sites are ignored.
/// With narrow.enabled, field sensitivities are computed and lines below the
/// threshold (electron-spin lines only) are flagged.
TransitionSet build_transition_set(const SpinSystemConfig& base, const PhysicalConstants& constants,
                                   const MicrowaveDrive& drive, std::span<const int> orientations,
                                   std::span<const int> n13c_values,
                                   const NarrowLineParams& narrow = {});

/// One contour to render: its weight is the integrated area before scale.
struct WeightedLine {
    double f_mhz = 0.0;
    double weight = 0.0;
    int delta_ms = 0;
    bool narrow = false;
};

/// Lines of equal delta_ms and narrowness closer than this render as one
/// line at their weighted-mean position.
inline constexpr double kLineMergeTolerance = 1e-6;  // MHz

/// Adds scale * sum(weight * contour) to `out`. Bath shifts (times delta_ms)
/// apply to non-narrow lines with delta_ms != 0; narrow lines use a Lorentzian
/// of FWHM narrow.fwhm. Gaussian lines whose support (plus bath reach) misses
/// the grid are skipped.
void render_lines(std::span<const WeightedLine> lines, const LineShapeParams& shape,
                  const BathConfigurationSet* bath, const NarrowLineParams& narrow,
                  std::span<const double> grid, std::span<double> out);

struct SynthesisOptions {
    std::vector<int> orientations{0, 1, 2, 3};
    std::vector<int> n13c_mask{0, 1, 2};
    NarrowLineParams narrow;
};

/// Line weight = P_n(p) * fraction * (amplitude or rabi^2) / (3 * 2^n), i.e.
/// per-line strength times the population of its nuclear sublevel.
std::vector<WeightedLine> weighted_lines(const TransitionSet& set, const IsotopologueWeights& weights,
                                         const LineShapeParams& shape,
                                         const SynthesisOptions& options);

/// F(f) = level + scale * sum of weighted contours over the requested
/// orientations and isotopologues. Throws std::invalid_argument when a
/// requested (orientation, n13c) pair has no transitions in `set`.
SpectrumCurve synthesize_spectrum(const TransitionSet& set, const IsotopologueWeights& weights,
                                  const LineShapeParams& shape, const BathConfigurationSet* bath,
                                  std::span<const double> grid, const SynthesisOptions& options = {});

/// The Lorentzian contribution of the magneto-insensitive lines of one system.
struct NarrowFeature {
    std::vector<Transition> lines;
    std::vector<double> sensitivity;
    SpectrumCurve curve;
};

/// Selects electron-spin transitions of `cfg` with |df/dB| < params.threshold and renders
/// them as unit-scale Lorentzians of FWHM params.fwhm, weighted like
/// weighted_lines() with P_n = 1.
NarrowFeature narrow_feature_curve(const SpinSystemConfig& cfg, const PhysicalConstants& constants,
                                   const MicrowaveDrive& drive, const NarrowLineParams& params,
                                   std::span<const double> grid,
                                   LineWeighting weighting = LineWeighting::saturation);

}  // namespace nvspec
