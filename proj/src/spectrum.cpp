#include "nvspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include "nvspec/line_kernels.hpp"

namespace nvspec {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

void require_fraction(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("13C fraction must be in [0, 1], got " + std::to_string(p));
    }
}

// Distribution of (occupied up-spins - occupied down-spins) over `count` sites.
std::vector<double> net_spin_distribution(int count, double p) {
    std::vector<double> dist{1.0};
    const double step[3] = {0.5 * p, 1.0 - p, 0.5 * p};
    for (int site = 0; site < count; ++site) {
        std::vector<double> next(dist.size() + 2, 0.0);
        for (std::size_t i = 0; i < dist.size(); ++i)
            for (std::size_t k = 0; k < 3; ++k) next[i + k] += dist[i] * step[k];
        dist = std::move(next);
    }
    return dist;  // index i corresponds to net count i - count
}

// Grid range within +-cutoff of center; cutoff <= 0 means the whole grid.
std::pair<std::size_t, std::size_t> window(std::span<const double> grid, double center, double cutoff) {
    if (!(cutoff > 0.0)) return {0, grid.size()};
    const auto lo = std::lower_bound(grid.begin(), grid.end(), center - cutoff);
    const auto hi = std::upper_bound(lo, grid.end(), center + cutoff);
    return {static_cast<std::size_t>(lo - grid.begin()), static_cast<std::size_t>(hi - grid.begin())};
}

// Half-width beyond which a contour is not evaluated; 0 means the whole grid.
double contour_cutoff(LineContour contour, double width) {
    switch (contour) {
        case LineContour::gaussian_width: return 7.0 * width;
        case LineContour::gaussian_stddev: return 9.0 * width;
        case LineContour::lorentzian: return 0.0;
    }
    return 0.0;
}

bool contains_value(std::span<const int> values, int v) {
    return std::find(values.begin(), values.end(), v) != values.end();
}

}  // namespace

IsotopologueWeights binomial_weights(double p) {
    require_fraction(p);
    const double q = 1.0 - p;
    IsotopologueWeights w;
    w.p = p;
    w.probability = {q * q * q, 3.0 * p * q * q, 3.0 * p * p * q, p * p * p};
    return w;
}

void validate(const LineShapeParams& shape) {
    if (!std::isfinite(shape.level) || !std::isfinite(shape.scale)) {
        throw std::invalid_argument("line shape level and scale must be finite");
    }
    if (!(shape.sigma0 > 0.0) || !std::isfinite(shape.sigma0)) {
        throw std::invalid_argument("sigma0 must be > 0");
    }
    if (!(shape.sigma_b >= 0.0) || !std::isfinite(shape.sigma_b)) {
        throw std::invalid_argument("sigma_b must be >= 0");
    }
}

double contour_value(LineContour contour, double x, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("contour width must be > 0");
    switch (contour) {
        case LineContour::gaussian_width: {
            const double u = x / width;
            return std::exp(-u * u) / (kSqrtPi * width);
        }
        case LineContour::gaussian_stddev: {
            const double u = x / width;
            return std::exp(-0.5 * u * u) / (std::numbers::sqrt2 * kSqrtPi * width);
        }
        case LineContour::lorentzian: {
            const double hwhm = 0.5 * width;
            return hwhm / (std::numbers::pi * (x * x + hwhm * hwhm));
        }
    }
    return 0.0;
}

void validate(const SpectrumCurve& curve) {
    if (curve.freqs.size() != curve.values.size()) {
        throw std::invalid_argument("spectrum has " + std::to_string(curve.freqs.size()) +
                                    " frequencies but " + std::to_string(curve.values.size()) +
                                    " values");
    }
    for (std::size_t i = 0; i < curve.freqs.size(); ++i) {
        if (!std::isfinite(curve.freqs[i]) || !std::isfinite(curve.values[i])) {
            throw std::invalid_argument("spectrum point " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && !(curve.freqs[i] > curve.freqs[i - 1])) {
            throw std::invalid_argument("spectrum frequencies not strictly increasing at point " +
                                        std::to_string(i));
        }
    }
}

std::vector<double> make_grid(double start, double stop, double step) {
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
        throw std::invalid_argument("grid bounds must be finite");
    }
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be > 0");
    if (!(stop > start)) throw std::invalid_argument("grid stop must exceed start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-3)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = start + static_cast<double>(i) * step;
    return grid;
}

double BathConfigurationSet::mean() const {
    double m = 0.0;
    for (const BathEntry& e : entries) m += e.weight * e.shift;
    return m;
}

double BathConfigurationSet::variance() const {
    const double m = mean();
    double v = 0.0;
    for (const BathEntry& e : entries) v += e.weight * (e.shift - m) * (e.shift - m);
    return v;
}

BathConfigurationSet bath_shift_distribution(double p, const BathSites& sites) {
    require_fraction(p);
    if (sites.count_group1 < 0 || sites.count_group2 < 0) {
        throw std::invalid_argument("bath site counts must be >= 0");
    }
    if (!std::isfinite(sites.azz_group1) || !std::isfinite(sites.azz_group2)) {
        throw std::invalid_argument("bath couplings must be finite");
    }
    const std::vector<double> d1 = net_spin_distribution(sites.count_group1, p);
    const std::vector<double> d2 = net_spin_distribution(sites.count_group2, p);

    std::vector<BathEntry> raw;
    raw.reserve(d1.size() * d2.size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
        for (std::size_t k = 0; k < d2.size(); ++k) {
            const double w = d1[i] * d2[k];
            if (w == 0.0) continue;
            const double m1 = static_cast<double>(i) - sites.count_group1;
            const double m2 = static_cast<double>(k) - sites.count_group2;
            raw.push_back({0.5 * (m1 * sites.azz_group1 + m2 * sites.azz_group2), w});
        }
    }
    std::sort(raw.begin(), raw.end(),
              [](const BathEntry& a, const BathEntry& b) { return a.shift < b.shift; });

    BathConfigurationSet set;
    std::size_t start = 0;
    while (start < raw.size()) {
        std::size_t end = start + 1;
        while (end < raw.size() && raw[end].shift - raw[start].shift < kBathMergeTolerance) ++end;
        double weight = 0.0;
        double moment = 0.0;
        for (std::size_t j = start; j < end; ++j) {
            weight += raw[j].weight;
            moment += raw[j].weight * raw[j].shift;
        }
        set.entries.push_back({end - start == 1 ? raw[start].shift : moment / weight, weight});
        start = end;
    }
    return set;
}

bool TransitionSet::contains(int orientation, int n13c) const {
    return std::any_of(groups.begin(), groups.end(), [&](const TransitionGroup& g) {
        return g.orientation == orientation && g.n13c == n13c;
    });
}

std::size_t TransitionSet::line_count() const {
    std::size_t n = 0;
    for (const TransitionGroup& g : groups) n += g.lines.size();
    return n;
}

std::vector<std::vector<int>> carbon_site_choices(int n13c) {
    switch (n13c) {
        case 0: return {{}};
        case 1: return {{0}, {1}, {2}};
        case 2: return {{0, 1}, {0, 2}, {1, 2}};
        case 3: return {{0, 1, 2}};
        default:
            throw std::invalid_argument("n13c must be in 0..3, got " + std::to_string(n13c));
    }
}

TransitionSet build_transition_set(const SpinSystemConfig& base, const PhysicalConstants& constants,
                                   const MicrowaveDrive& drive, std::span<const int> orientations,
                                   std::span<const int> n13c_values,
                                   const NarrowLineParams& narrow) {
    TransitionSet set;
    for (int orientation : orientations) {
        for (int n : n13c_values) {
            const auto choices = carbon_site_choices(n);
            for (const std::vector<int>& sites : choices) {
                SpinSystemConfig cfg = base;
                cfg.orientation = orientation;
                cfg.n13c = n;
                cfg.carbon_sites = sites;
                TransitionGroup group;
                group.orientation = orientation;
                group.n13c = n;
                group.carbon_sites = sites;
                group.fraction = 1.0 / static_cast<double>(choices.size());
                group.lines = compute_transitions(cfg, constants, drive);
                if (narrow.enabled) {
                    group.sensitivity = field_sensitivities(cfg, constants, group.lines);
                    group.narrow.resize(group.lines.size());
                    for (std::size_t i = 0; i < group.lines.size(); ++i) {
                        // nuclear (delta_ms = 0) lines are trivially field-insensitive
                        group.narrow[i] = group.lines[i].delta_ms != 0 &&
                                          std::abs(group.sensitivity[i]) < narrow.threshold;
                    }
                }
                set.groups.push_back(std::move(group));
            }
        }
    }
    return set;
}

void render_lines(std::span<const WeightedLine> lines, const LineShapeParams& shape,
                  const BathConfigurationSet* bath, const NarrowLineParams& narrow,
                  std::span<const double> grid, std::span<double> out) {
    validate(shape);
    if (grid.size() != out.size()) throw std::invalid_argument("grid and output sizes differ");
    if (grid.empty() || shape.scale == 0.0) return;

    std::vector<kernels::LineInstance> gaussians;
    std::vector<kernels::LineInstance> lorentzians;
    auto add = [&](LineContour contour, double center, double weight, double width) {
        const double area = shape.scale * weight;
        if (area == 0.0) return;
        kernels::LineInstance inst;
        inst.center = center;
        switch (contour) {
            case LineContour::gaussian_width:
                inst.amplitude = area / (kSqrtPi * width);
                inst.inv_width = 1.0 / width;
                break;
            case LineContour::gaussian_stddev:
                inst.amplitude = area / (std::numbers::sqrt2 * kSqrtPi * width);
                inst.inv_width = 1.0 / (std::numbers::sqrt2 * width);
                break;
            case LineContour::lorentzian:
                inst.amplitude = area / (std::numbers::pi * 0.5 * width);
                inst.inv_width = 2.0 / width;
                break;
        }
        std::tie(inst.begin, inst.end) = window(grid, center, contour_cutoff(contour, width));
        if (inst.begin == inst.end) return;
        (contour == LineContour::lorentzian ? lorentzians : gaussians).push_back(inst);
    };

    // Cull lines whose support misses the grid and merge coincident ones (the
    // C3-equivalent carbon sites in an aligned field) before the bath
    // expansion multiplies the count.
    double bath_reach = 0.0;
    if (bath != nullptr) {
        for (const BathEntry& e : bath->entries) bath_reach = std::max(bath_reach, std::abs(e.shift));
    }
    std::vector<WeightedLine> kept;
    kept.reserve(lines.size());
    for (const WeightedLine& line : lines) {
        if (line.weight == 0.0) continue;
        const double cutoff = line.narrow ? 0.0 : contour_cutoff(shape.contour, shape.width(line.delta_ms));
        if (cutoff > 0.0) {
            const double reach =
                cutoff + (bath != nullptr ? std::abs(line.delta_ms) * bath_reach : 0.0);
            if (line.f_mhz + reach < grid.front() || line.f_mhz - reach > grid.back()) continue;
        }
        kept.push_back(line);
    }
    std::sort(kept.begin(), kept.end(), [](const WeightedLine& a, const WeightedLine& b) {
        return std::tie(a.narrow, a.delta_ms, a.f_mhz) < std::tie(b.narrow, b.delta_ms, b.f_mhz);
    });
    std::vector<WeightedLine> merged;
    merged.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size();) {
        WeightedLine m = kept[i];
        double moment = m.weight * m.f_mhz;
        std::size_t j = i + 1;
        for (; j < kept.size() && kept[j].narrow == m.narrow && kept[j].delta_ms == m.delta_ms &&
               kept[j].f_mhz - kept[i].f_mhz <= kLineMergeTolerance;
             ++j) {
            m.weight += kept[j].weight;
            moment += kept[j].weight * kept[j].f_mhz;
        }
        if (m.weight != 0.0) m.f_mhz = moment / m.weight;
        merged.push_back(m);
        i = j;
    }

    for (const WeightedLine& line : merged) {
        if (line.narrow) {
            if (!(narrow.fwhm > 0.0)) throw std::invalid_argument("narrow-line FWHM must be > 0");
            add(LineContour::lorentzian, line.f_mhz, line.weight, narrow.fwhm);
            continue;
        }
        const double width = shape.width(line.delta_ms);
        if (bath != nullptr && line.delta_ms != 0) {
            for (const BathEntry& e : bath->entries) {
                add(shape.contour, line.f_mhz + line.delta_ms * e.shift, line.weight * e.weight, width);
            }
        } else {
            add(shape.contour, line.f_mhz, line.weight, width);
        }
    }
    kernels::accumulate_gaussians(grid, out, gaussians);
    kernels::accumulate_lorentzians(grid, out, lorentzians);
}

std::vector<WeightedLine> weighted_lines(const TransitionSet& set, const IsotopologueWeights& weights,
                                         const LineShapeParams& shape,
                                         const SynthesisOptions& options) {
    std::vector<WeightedLine> out;
    for (const TransitionGroup& g : set.groups) {
        if (!contains_value(options.orientations, g.orientation)) continue;
        if (!contains_value(options.n13c_mask, g.n13c)) continue;
        const double factor = weights[g.n13c] * g.fraction / (3.0 * static_cast<double>(1 << g.n13c));
        if (factor == 0.0) continue;
        for (std::size_t i = 0; i < g.lines.size(); ++i) {
            const Transition& t = g.lines[i];
            const double strength =
                shape.weighting == LineWeighting::saturation ? t.amplitude : t.rabi * t.rabi;
            WeightedLine w;
            w.f_mhz = t.f_mhz;
            w.weight = factor * strength;
            w.delta_ms = t.delta_ms;
            w.narrow = options.narrow.enabled && !g.narrow.empty() && g.narrow[i] != 0;
            out.push_back(w);
        }
    }
    return out;
}

SpectrumCurve synthesize_spectrum(const TransitionSet& set, const IsotopologueWeights& weights,
                                  const LineShapeParams& shape, const BathConfigurationSet* bath,
                                  std::span<const double> grid, const SynthesisOptions& options) {
    validate(shape);
    if (grid.empty()) throw std::invalid_argument("frequency grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument("frequency grid not strictly increasing at point " +
                                        std::to_string(i));
        }
    }
    for (int orientation : options.orientations) {
        for (int n : options.n13c_mask) {
            if (!set.contains(orientation, n)) {
                throw std::invalid_argument("no transitions for orientation " +
                                            std::to_string(orientation) + ", n13c " +
                                            std::to_string(n));
            }
        }
    }
    SpectrumCurve curve;
    curve.freqs.assign(grid.begin(), grid.end());
    curve.values.assign(grid.size(), shape.level);
    const std::vector<WeightedLine> lines = weighted_lines(set, weights, shape, options);
    render_lines(lines, shape, bath, options.narrow, grid, curve.values);
    return curve;
}

NarrowFeature narrow_feature_curve(const SpinSystemConfig& cfg, const PhysicalConstants& constants,
                                   const MicrowaveDrive& drive, const NarrowLineParams& params,
                                   std::span<const double> grid, LineWeighting weighting) {
    const std::vector<Transition> all = compute_transitions(cfg, constants, drive);
    const std::vector<double> sens = field_sensitivities(cfg, constants, all);

    NarrowFeature feature;
    feature.curve.freqs.assign(grid.begin(), grid.end());
    feature.curve.values.assign(grid.size(), 0.0);
    std::vector<WeightedLine> lines;
    const double factor = 1.0 / (3.0 * static_cast<double>(1 << cfg.n13c));
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].delta_ms == 0 || !(std::abs(sens[i]) < params.threshold)) continue;
        feature.lines.push_back(all[i]);
        feature.sensitivity.push_back(sens[i]);
        const double strength =
            weighting == LineWeighting::saturation ? all[i].amplitude : all[i].rabi * all[i].rabi;
        lines.push_back({all[i].f_mhz, factor * strength, all[i].delta_ms, true});
    }
    render_lines(lines, LineShapeParams{}, nullptr, params, grid, feature.curve.values);
    return feature;
}

}  // namespace nvspec
