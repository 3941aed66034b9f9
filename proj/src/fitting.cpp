#include "nvspec/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace nvspec {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Parameters that only reshape lines come first so Jacobian columns for them
// reuse the cached transition set before a Hamiltonian parameter evicts it.
constexpr std::array<std::size_t, FitParams::kCount> kFullEvaluationOrder{
    9, 10, 11, 12, 13, 8, 0, 1, 2, 3, 4, 5, 6, 7};

double typical_scale(std::string_view name, const SpectrumCurve& data) {
    if (name == "level" || name == "scale") {
        const auto [lo, hi] = std::minmax_element(data.values.begin(), data.values.end());
        return std::max(1e-3 * (*hi - *lo), 1e-12);
    }
    if (name == "theta" || name == "phi" || name == "xi" || name == "zeta") return 0.1;
    if (name == "p") return 0.01;
    if (name == "sigma0" || name == "sigma_b" || name == "sigma") return 0.1;
    return 1.0;
}

double exact_fit_floor(const SpectrumCurve& data) {
    double peak = 0.0;
    for (double v : data.values) peak = std::max(peak, std::abs(v));
    const double tol = 1e-10 * std::max(peak, 1e-300);
    return static_cast<double>(data.size()) * tol * tol;
}

void check_data(const SpectrumCurve& data, int free_count) {
    validate(data);
    if (static_cast<int>(data.size()) < free_count + 2) {
        throw std::invalid_argument("fit needs at least " + std::to_string(free_count + 2) +
                                    " data points, got " + std::to_string(data.size()));
    }
}

// Shared driver; `evaluate` maps a full parameter set to the model on the data grid.
template <class Params, class Evaluate>
FitResult run_fit(FitModelKind kind, const SpectrumCurve& data, const Params& init,
                  std::span<const std::size_t> order, const FitOptions& options, Evaluate evaluate) {
    std::vector<std::size_t> free;
    for (std::size_t i : order)
        if (!init[i].fixed) free.push_back(i);

    LeastSquaresProblem problem;
    const auto n = static_cast<Eigen::Index>(free.size());
    problem.lower.resize(n);
    problem.upper.resize(n);
    problem.typical.resize(n);
    Eigen::VectorXd x0(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const std::size_t i = free[static_cast<std::size_t>(c)];
        problem.names.emplace_back(Params::kNames[i]);
        problem.lower(c) = init[i].lower;
        problem.upper(c) = init[i].upper;
        problem.typical(c) = typical_scale(Params::kNames[i], data);
        x0(c) = init[i].value;
    }
    const Eigen::Map<const Eigen::VectorXd> observed(data.values.data(),
                                                     static_cast<Eigen::Index>(data.size()));
    auto unpack = [&](const Eigen::VectorXd& x) {
        Params p = init;
        for (Eigen::Index c = 0; c < n; ++c) p[free[static_cast<std::size_t>(c)]].value = x(c);
        return p;
    };
    problem.residuals = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const std::vector<double> model = evaluate(unpack(x));
        return Eigen::Map<const Eigen::VectorXd>(model.data(), static_cast<Eigen::Index>(model.size())) -
               observed;
    };

    LeastSquaresOptions solver = options.solver;
    solver.cost_floor = std::max(solver.cost_floor, exact_fit_floor(data));
    const LeastSquaresResult lsq = levenberg_marquardt(problem, x0, solver);

    FitResult result;
    result.model = kind;
    result.systematic_p = options.systematic_p;
    const Params fitted = unpack(lsq.x);
    for (std::size_t i = 0; i < Params::kCount; ++i) {
        result.names.emplace_back(Params::kNames[i]);
        result.values.push_back(fitted[i].value);
        result.sigmas.push_back(kNaN);
        result.fixed.push_back(fitted[i].fixed ? 1 : 0);
        result.lower.push_back(fitted[i].lower);
        result.upper.push_back(fitted[i].upper);
    }
    for (Eigen::Index c = 0; c < n; ++c) {
        result.sigmas[free[static_cast<std::size_t>(c)]] = lsq.sigma(c);
    }
    result.covariance = lsq.covariance;
    result.free_names = problem.names;
    result.residual_norm = lsq.cost;
    result.iterations = lsq.iterations;
    result.converged = lsq.converged;
    result.status = lsq.status;
    result.cost_history = lsq.cost_history;
    result.singular = lsq.singular;
    result.degenerate_parameter = lsq.degenerate_parameter;
    return result;
}

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string_view model_name(FitModelKind kind) {
    return kind == FitModelKind::full ? "full" : "gauss7";
}

double FitResult::value(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw std::invalid_argument("fit result has no parameter '" + std::string(name) + "'");
}

double FitResult::sigma(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas[i];
    throw std::invalid_argument("fit result has no parameter '" + std::string(name) + "'");
}

double FitResult::p_total_uncertainty() const {
    if (std::find(names.begin(), names.end(), "p") == names.end()) return std::nan("");
    const double s = sigma("p");
    return std::hypot(s, systematic_p);
}

FitResult fit_full(const SpectrumCurve& data, const FitParams& init, const FullModel& model,
                   const FitOptions& options) {
    validate(init);
    check_data(data, init.free_count());
    const std::span<const double> grid(data.freqs);
    return run_fit(FitModelKind::full, data, init, kFullEvaluationOrder, options,
                   [&](const FitParams& p) { return model.evaluate(p, grid); });
}

FitResult fit_full(const SpectrumCurve& data, const FitParams& init, const FullModelSettings& settings,
                   const FitOptions& options) {
    const FullModel model(settings);
    return fit_full(data, init, model, options);
}

FitParameter& Gauss7Params::operator[](std::size_t i) {
    return const_cast<FitParameter&>(static_cast<const Gauss7Params&>(*this)[i]);
}

const FitParameter& Gauss7Params::operator[](std::size_t i) const {
    switch (i) {
        case 0: return level;
        case 1: return scale;
        case 2: return sigma;
        case 3: return p;
        case 4: return f00;
        case 5: return f10;
        case 6: return f11;
        case 7: return f20;
        case 8: return f23;
        default: throw std::out_of_range("gauss7 parameter index");
    }
}

std::size_t Gauss7Params::index_of(std::string_view name) {
    for (std::size_t i = 0; i < kCount; ++i)
        if (kNames[i] == name) return i;
    return kCount;
}

int Gauss7Params::free_count() const {
    int n = 0;
    for (std::size_t i = 0; i < kCount; ++i) n += (*this)[i].fixed ? 0 : 1;
    return n;
}

std::array<double, 7> Gauss7Params::centers() const {
    return {f00.value, f10.value, f11.value, f20.value,
            f00.value + offset21, f00.value + offset22, f23.value};
}

void validate(const Gauss7Params& params) {
    for (std::size_t i = 0; i < Gauss7Params::kCount; ++i) {
        const FitParameter& q = params[i];
        const std::string name(Gauss7Params::kNames[i]);
        if (!std::isfinite(q.value)) throw std::invalid_argument("parameter '" + name + "' is not finite");
        if (std::isnan(q.lower) || std::isnan(q.upper) || !(q.lower <= q.upper)) {
            throw std::invalid_argument("bounds of '" + name + "' are not ordered");
        }
        if (q.value < q.lower || q.value > q.upper) {
            throw std::invalid_argument("parameter '" + name + "' lies outside its bounds");
        }
    }
    if (!(params.sigma.value > 0.0)) throw std::invalid_argument("gauss7 sigma must be > 0");
    if (params.p.lower < 0.0 || params.p.upper > 1.0) {
        throw std::invalid_argument("bounds of 'p' must lie within [0, 1]");
    }
    if (!std::isfinite(params.offset21) || !std::isfinite(params.offset22)) {
        throw std::invalid_argument("gauss7 offsets must be finite");
    }
    if (params.free_count() < 1) throw std::invalid_argument("at least one parameter must be free");
}

std::vector<double> gauss7_model(const Gauss7Params& params, std::span<const double> grid) {
    const IsotopologueWeights w = binomial_weights(params.p.value);
    const double sigma = params.sigma.value;
    if (!(sigma > 0.0)) throw std::invalid_argument("gauss7 sigma must be > 0");
    const std::array<double, 7> f = params.centers();
    const std::array<double, 7> weight{w[0] / 2, w[1] / 4, w[1] / 4, w[2] / 8,
                                       w[2] / 8, w[2] / 8, w[2] / 8};
    const double norm = params.scale.value / (kSqrtPi * sigma);
    std::vector<double> out(grid.size(), params.level.value);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 7; ++k) {
            const double u = (grid[j] - f[k]) / sigma;
            acc += weight[k] * std::exp(-u * u);
        }
        out[j] += norm * acc;
    }
    return out;
}

FitResult fit_gauss7(const SpectrumCurve& data, const Gauss7Params& init, const FitOptions& options) {
    validate(init);
    check_data(data, init.free_count());
    const std::span<const double> grid(data.freqs);
    std::array<std::size_t, Gauss7Params::kCount> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    return run_fit(FitModelKind::gauss7, data, init, order, options,
                   [&](const Gauss7Params& p) { return gauss7_model(p, grid); });
}

Gauss7Params gauss7_initial_guess(const FitParams& full, const FullModel& model,
                                  std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("frequency grid is empty");
    const FullModelSettings& settings = model.settings();
    const TransitionSet set = model.transitions(full);
    const LineShapeParams shape = line_shape_from(full, settings);

    struct Cluster {
        double weight = 0.0;
        double moment = 0.0;
        double center() const { return moment / weight; }
    };
    // Clusters of isotopologue n inside the grid, strongest 2^n returned by frequency.
    auto clusters_for = [&](int n) {
        SynthesisOptions options;
        options.orientations = settings.orientations;
        options.n13c_mask = {n};
        IsotopologueWeights unit;
        unit.probability = {1.0, 1.0, 1.0, 1.0};
        std::vector<WeightedLine> lines = weighted_lines(set, unit, shape, options);
        std::erase_if(lines, [&](const WeightedLine& l) {
            return l.f_mhz < grid.front() || l.f_mhz > grid.back() || l.weight <= 0.0;
        });
        std::sort(lines.begin(), lines.end(),
                  [](const WeightedLine& a, const WeightedLine& b) { return a.f_mhz < b.f_mhz; });
        std::vector<Cluster> clusters;
        double last = -std::numeric_limits<double>::infinity();
        for (const WeightedLine& l : lines) {
            if (clusters.empty() || l.f_mhz - last > 5.0) clusters.emplace_back();
            clusters.back().weight += l.weight;
            clusters.back().moment += l.weight * l.f_mhz;
            last = l.f_mhz;
        }
        // n = 2 only needs its outer pair; the inner two are tied to f00.
        const std::size_t wanted = n == 2 ? 2 : std::size_t{1} << n;
        if (clusters.size() < wanted) {
            throw std::invalid_argument("model shows " + std::to_string(clusters.size()) +
                                        " line groups for n13c = " + std::to_string(n) +
                                        " inside the grid; seven-Gaussian model needs " +
                                        std::to_string(wanted));
        }
        if (n == 2) {
            double strongest = 0.0;
            for (const Cluster& c : clusters) strongest = std::max(strongest, c.weight);
            std::erase_if(clusters, [&](const Cluster& c) { return c.weight < 0.2 * strongest; });
            std::sort(clusters.begin(), clusters.end(),
                      [](const Cluster& a, const Cluster& b) { return a.center() < b.center(); });
            if (clusters.size() < 2) {
                throw std::invalid_argument("model shows one strong line group for n13c = 2 inside the grid");
            }
            return std::vector<Cluster>{clusters.front(), clusters.back()};
        }
        std::stable_sort(clusters.begin(), clusters.end(),
                         [](const Cluster& a, const Cluster& b) { return a.weight > b.weight; });
        clusters.resize(wanted);
        std::sort(clusters.begin(), clusters.end(),
                  [](const Cluster& a, const Cluster& b) { return a.center() < b.center(); });
        return clusters;
    };

    const auto c0 = clusters_for(0);
    const auto c1 = clusters_for(1);
    const auto c2 = clusters_for(2);

    Gauss7Params g;
    g.level.value = full.level.value;
    g.p.value = full.p.value;
    // A line group of weight w (per unit P_n) corresponds to P_n / 2^(n+1) here.
    g.scale.value = full.scale.value * 2.0 * c0[0].weight;
    double variance = 0.0;
    if (settings.bath_enabled) {
        variance = bath_shift_distribution(full.p.value, settings.bath_sites).variance();
    }
    const double sigma_line = shape.width(1);
    const double sigma_eff = settings.contour == LineContour::gaussian_stddev
                                 ? std::numbers::sqrt2 * std::sqrt(sigma_line * sigma_line + variance)
                                 : std::sqrt(sigma_line * sigma_line + 2.0 * variance);
    g.sigma.value = sigma_eff;
    g.f00.value = c0[0].center();
    g.f10.value = c1[0].center();
    g.f11.value = c1[1].center();
    g.f20.value = c2[0].center();
    g.f23.value = c2[1].center();
    return g;
}

std::string fit_report_json(const FitResult& result) {
    nlohmann::ordered_json report;
    report["model"] = std::string(model_name(result.model));
    report["converged"] = result.converged;
    report["iterations"] = result.iterations;
    report["residual_norm"] = number_or_null(result.residual_norm);
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.names.size(); ++i) {
        nlohmann::ordered_json entry;
        entry["name"] = result.names[i];
        entry["value"] = number_or_null(result.values[i]);
        entry["sigma"] = number_or_null(result.sigmas[i]);
        entry["fixed"] = result.fixed[i] != 0;
        entry["lower"] = number_or_null(result.lower[i]);
        entry["upper"] = number_or_null(result.upper[i]);
        params.push_back(entry);
    }
    report["params"] = params;
    report["p_total_uncertainty"] = number_or_null(result.p_total_uncertainty());
    report["status"] = result.status;
    if (result.degenerate_parameter) report["degenerate_parameter"] = *result.degenerate_parameter;
    return report.dump(2) + "\n";
}

}  // namespace nvspec
