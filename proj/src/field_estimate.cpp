#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nvspec/errors.hpp"
#include "nvspec/fitting.hpp"

namespace nvspec {

namespace {

using Matrix3c = Eigen::Matrix3cd;

struct FieldGeometry {
    double b = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

// The two m_s = 0 -> +-1 line positions of each orientation, electron spin only.
std::vector<double> predicted_lines(const FieldGeometry& g, const FieldEstimateOptions& options) {
    static const SpinOperators s = build_spin_operators(1.0);
    const Matrix3c sx = s.sx;
    const Matrix3c sy = s.sy;
    const Matrix3c sz = s.sz;
    SpinSystemConfig cfg;
    cfg.b_mag = std::abs(g.b);
    cfg.theta = g.theta;
    cfg.phi = g.phi;
    const Vec3 lab = lab_field(cfg);
    std::vector<double> lines;
    lines.reserve(2 * kOrientationCount);
    for (int k = 0; k < kOrientationCount; ++k) {
        const Vec3 b = field_in_nv_frame(lab, k);
        const Matrix3c h = options.zfs * sz * sz +
                           options.gamma_e * (b.x() * sx + b.y() * sy + b.z() * sz);
        Eigen::SelfAdjointEigenSolver<Matrix3c> eig(h);
        // The eigenstate with the largest m_s = 0 weight is the lower level of both lines.
        Eigen::Index zero = 0;
        eig.eigenvectors().row(1).cwiseAbs2().maxCoeff(&zero);
        for (Eigen::Index i = 0; i < 3; ++i) {
            if (i != zero) lines.push_back(std::abs(eig.eigenvalues()(i) - eig.eigenvalues()(zero)));
        }
    }
    return lines;
}

double nearest_distance(double f, const std::vector<double>& candidates) {
    double best = std::numeric_limits<double>::infinity();
    for (double c : candidates) best = std::min(best, std::abs(f - c));
    return best;
}

double signed_nearest(double f, const std::vector<double>& candidates) {
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (double c : candidates) {
        if (std::abs(f - c) < best) {
            best = std::abs(f - c);
            value = f - c;
        }
    }
    return value;
}

double mismatch(const std::vector<DetectedPeak>& peaks, const std::vector<double>& lines,
                double f_lo, double f_hi) {
    std::vector<double> observed;
    for (const DetectedPeak& pk : peaks) observed.push_back(pk.f_mhz);
    double sum = 0.0;
    int count = 0;
    for (double f : observed) {
        const double d = nearest_distance(f, lines);
        sum += d * d;
        ++count;
    }
    for (double f : lines) {
        if (f < f_lo || f > f_hi) continue;
        const double d = nearest_distance(f, observed);
        sum += d * d;
        ++count;
    }
    return std::sqrt(sum / count);
}

}  // namespace

std::vector<DetectedPeak> detect_peaks(const SpectrumCurve& spectrum, const FieldEstimateOptions& options) {
    validate(spectrum);
    const std::size_t n = spectrum.size();
    if (n < 3) return {};
    std::vector<double> sorted = spectrum.values;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    const double median = sorted[n / 2];
    const auto [lo, hi] = std::minmax_element(spectrum.values.begin(), spectrum.values.end());
    const double sign = (*hi - median) >= (median - *lo) ? 1.0 : -1.0;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = sign * (spectrum.values[i] - median);
    const double top = *std::max_element(y.begin(), y.end());
    if (!(top > 0.0)) return {};
    const double threshold = options.peak_fraction * top;
    const std::vector<double>& f = spectrum.freqs;

    std::vector<DetectedPeak> raw;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > threshold && y[i] >= y[i - 1] && y[i] > y[i + 1])) continue;
        DetectedPeak pk;
        pk.height = y[i];
        pk.f_mhz = f[i];
        const double curvature = y[i - 1] - 2.0 * y[i] + y[i + 1];
        if (curvature < 0.0) {
            const double delta = 0.5 * (y[i - 1] - y[i + 1]) / curvature;
            pk.f_mhz = f[i] + delta * 0.5 * (f[i + 1] - f[i - 1]);
        }
        const double half = 0.5 * y[i];
        std::size_t l = i;
        while (l > 0 && y[l] > half) --l;
        std::size_t r = i;
        while (r + 1 < n && y[r] > half) ++r;
        auto crossing = [&](std::size_t a, std::size_t b) {
            if (y[a] == y[b]) return f[a];
            return f[a] + (half - y[a]) * (f[b] - f[a]) / (y[b] - y[a]);
        };
        const double left = y[l] <= half ? crossing(l, l + 1) : f[l];
        const double right = y[r] <= half ? crossing(r - 1, r) : f[r];
        pk.hwhm = 0.5 * (right - left);
        raw.push_back(pk);
    }

    std::vector<DetectedPeak> merged;
    std::size_t start = 0;
    while (start < raw.size()) {
        std::size_t end = start + 1;
        while (end < raw.size() && raw[end].f_mhz - raw[end - 1].f_mhz < options.merge_distance) ++end;
        DetectedPeak m;
        double weight = 0.0;
        for (std::size_t j = start; j < end; ++j) {
            weight += raw[j].height;
            m.f_mhz += raw[j].height * raw[j].f_mhz;
            m.hwhm += raw[j].height * raw[j].hwhm;
            m.height = std::max(m.height, raw[j].height);
        }
        m.f_mhz /= weight;
        m.hwhm /= weight;
        merged.push_back(m);
        start = end;
    }
    return merged;
}

FieldEstimate estimate_initial_field(const SpectrumCurve& reference, const FieldEstimateOptions& options) {
    FieldEstimate est;
    est.peaks = detect_peaks(reference, options);
    if (est.peaks.empty()) throw InputError("reference spectrum", "no resonance found");

    double mean_hwhm = 0.0;
    for (const DetectedPeak& pk : est.peaks) mean_hwhm += pk.hwhm;
    mean_hwhm /= static_cast<double>(est.peaks.size());
    est.b_uncertainty = mean_hwhm / (options.gamma_e * std::sqrt(static_cast<double>(est.peaks.size())));

    if (est.peaks.size() == 1) {
        est.angular_uncertainty = true;
        est.rms_mismatch = std::abs(est.peaks.front().f_mhz - options.zfs);
        return est;
    }

    const double f_lo = reference.freqs.front();
    const double f_hi = reference.freqs.back();
    double max_shift = 0.0;
    for (const DetectedPeak& pk : est.peaks) max_shift = std::max(max_shift, std::abs(pk.f_mhz - options.zfs));
    const double b_max = 2.0 * max_shift / options.gamma_e + 5.0;

    constexpr int kBSteps = 80;
    constexpr int kThetaSteps = 31;  // 0..90 deg inclusive
    constexpr int kPhiSteps = 24;    // 0..120 deg exclusive
    FieldGeometry best;
    double best_score = std::numeric_limits<double>::infinity();
    for (int ib = 1; ib <= kBSteps; ++ib) {
        for (int it = 0; it < kThetaSteps; ++it) {
            for (int ip = 0; ip < kPhiSteps; ++ip) {
                const FieldGeometry g{b_max * ib / kBSteps, 0.5 * std::numbers::pi * it / (kThetaSteps - 1),
                                      (2.0 * std::numbers::pi / 3.0) * ip / kPhiSteps};
                const double score = mismatch(est.peaks, predicted_lines(g, options), f_lo, f_hi);
                if (score < best_score) {
                    best_score = score;
                    best = g;
                }
                if (it == 0) break;  // phi is irrelevant on the axis
            }
        }
    }

    LeastSquaresProblem problem;
    problem.names = {"b_mag", "theta", "phi"};
    problem.lower = Eigen::Vector3d(0.0, -std::numbers::pi, -std::numeric_limits<double>::infinity());
    problem.upper = Eigen::Vector3d(std::numeric_limits<double>::infinity(), 2.0 * std::numbers::pi,
                                    std::numeric_limits<double>::infinity());
    problem.typical = Eigen::Vector3d(1.0, 0.1, 0.1);
    problem.residuals = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const std::vector<double> lines = predicted_lines({x(0), x(1), x(2)}, options);
        Eigen::VectorXd r(static_cast<Eigen::Index>(est.peaks.size()));
        for (std::size_t i = 0; i < est.peaks.size(); ++i) {
            r(static_cast<Eigen::Index>(i)) = signed_nearest(est.peaks[i].f_mhz, lines);
        }
        return r;
    };
    LeastSquaresOptions lsq_options;
    lsq_options.max_iterations = 50;
    const LeastSquaresResult refined =
        levenberg_marquardt(problem, Eigen::Vector3d(best.b, best.theta, best.phi), lsq_options);

    FieldGeometry g{refined.x(0), refined.x(1), refined.x(2)};
    const double refined_score = mismatch(est.peaks, predicted_lines(g, options), f_lo, f_hi);
    if (!(refined_score <= best_score)) g = best;

    // Fold into theta in [0, pi/2], phi in [0, 2pi/3): the spectrum is even in
    // B and invariant under the threefold rotation about [111].
    double theta = std::fmod(g.theta, 2.0 * std::numbers::pi);
    double phi = g.phi;
    if (theta < 0.0) {
        theta = -theta;
        phi += std::numbers::pi;
    }
    if (theta > std::numbers::pi) {
        theta = 2.0 * std::numbers::pi - theta;
        phi += std::numbers::pi;
    }
    if (theta > 0.5 * std::numbers::pi) {
        theta = std::numbers::pi - theta;
        phi += std::numbers::pi;
    }
    const double wedge = 2.0 * std::numbers::pi / 3.0;
    phi = std::fmod(phi, wedge);
    if (phi < 0.0) phi += wedge;

    est.b_mag = g.b;
    est.theta = theta;
    est.phi = phi;
    est.rms_mismatch = std::min(refined_score, best_score);
    return est;
}

}  // namespace nvspec
