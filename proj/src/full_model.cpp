#include "nvspec/full_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nvspec {

namespace {

constexpr std::size_t kCacheSize = 3;

using Member = FitParameter FitParams::*;
constexpr std::array<Member, FitParams::kCount> kMembers{
    &FitParams::ex,    &FitParams::ey,    &FitParams::d_prime, &FitParams::b_mag,
    &FitParams::theta, &FitParams::phi,   &FitParams::xi,      &FitParams::zeta,
    &FitParams::alpha, &FitParams::level, &FitParams::scale,   &FitParams::sigma0,
    &FitParams::sigma_b, &FitParams::p};

std::array<double, 8> hamiltonian_key(const FitParams& p) {
    return {p.ex.value,    p.ey.value,  p.d_prime.value, p.b_mag.value,
            p.theta.value, p.phi.value, p.xi.value,      p.zeta.value};
}

}  // namespace

FitParameter& FitParams::operator[](std::size_t i) { return this->*kMembers.at(i); }
const FitParameter& FitParams::operator[](std::size_t i) const { return this->*kMembers.at(i); }

std::size_t FitParams::index_of(std::string_view name) {
    for (std::size_t i = 0; i < kCount; ++i)
        if (kNames[i] == name) return i;
    return kCount;
}

int FitParams::free_count() const {
    int n = 0;
    for (std::size_t i = 0; i < kCount; ++i) n += (*this)[i].fixed ? 0 : 1;
    return n;
}

void validate(const FitParams& params) {
    for (std::size_t i = 0; i < FitParams::kCount; ++i) {
        const FitParameter& q = params[i];
        const std::string name(FitParams::kNames[i]);
        if (!std::isfinite(q.value)) throw std::invalid_argument("parameter '" + name + "' is not finite");
        if (std::isnan(q.lower) || std::isnan(q.upper) || !(q.lower <= q.upper)) {
            throw std::invalid_argument("bounds of '" + name + "' are not ordered");
        }
        if (q.value < q.lower || q.value > q.upper) {
            throw std::invalid_argument("parameter '" + name + "' = " + std::to_string(q.value) +
                                        " lies outside its bounds");
        }
    }
    if (params.p.lower < 0.0 || params.p.upper > 1.0) {
        throw std::invalid_argument("bounds of 'p' must lie within [0, 1]");
    }
    if (params.free_count() < 1) throw std::invalid_argument("at least one parameter must be free");
}

SpinSystemConfig spin_config_from(const FitParams& params, const FullModelSettings& settings) {
    SpinSystemConfig cfg;
    cfg.ex = params.ex.value;
    cfg.ey = params.ey.value;
    cfg.d_prime = params.d_prime.value;
    cfg.b_mag = params.b_mag.value;
    cfg.theta = params.theta.value;
    cfg.phi = params.phi.value;
    cfg.xi = params.xi.value;
    cfg.zeta = params.zeta.value;
    cfg.include_nitrogen = settings.include_nitrogen;
    return cfg;
}

LineShapeParams line_shape_from(const FitParams& params, const FullModelSettings& settings) {
    LineShapeParams shape;
    shape.sigma0 = params.sigma0.value;
    shape.sigma_b = params.sigma_b.value;
    shape.level = params.level.value;
    shape.scale = params.scale.value;
    shape.contour = settings.contour;
    shape.weighting = settings.weighting;
    return shape;
}

FullModel::FullModel(FullModelSettings settings) : settings_(std::move(settings)) {
    if (settings_.orientations.empty()) throw std::invalid_argument("orientation list is empty");
    if (settings_.n13c_mask.empty()) throw std::invalid_argument("n13c mask is empty");
}

std::shared_ptr<const TransitionSet> FullModel::lookup(const FitParams& params) const {
    const auto key = hamiltonian_key(params);
    for (std::size_t i = 0; i < cache_.size(); ++i) {
        if (cache_[i].key == key) {
            ++hits_;
            if (i != 0) std::swap(cache_[0], cache_[i]);
            return cache_[0].set;
        }
    }
    MicrowaveDrive drive;
    drive.b_mw = settings_.b_mw;
    drive.alpha = 1.0;
    drive.rabi_floor = settings_.rabi_floor;
    auto set = std::make_shared<const TransitionSet>(
        build_transition_set(spin_config_from(params, settings_), settings_.constants, drive,
                             settings_.orientations, settings_.n13c_mask, settings_.narrow));
    ++builds_;
    cache_.insert(cache_.begin(), CacheEntry{key, set});
    if (cache_.size() > kCacheSize) cache_.pop_back();
    return set;
}

TransitionSet FullModel::transitions(const FitParams& params) const {
    TransitionSet set = *lookup(params);
    if (params.alpha.value != 1.0) {
        for (TransitionGroup& g : set.groups)
            for (Transition& t : g.lines) t.amplitude = saturation_amplitude(t.rabi, params.alpha.value);
    }
    return set;
}

std::vector<double> FullModel::evaluate(const FitParams& params, std::span<const double> grid) const {
    const LineShapeParams shape = line_shape_from(params, settings_);
    const IsotopologueWeights weights = binomial_weights(params.p.value);
    BathConfigurationSet bath;
    if (settings_.bath_enabled) bath = bath_shift_distribution(params.p.value, settings_.bath_sites);

    SynthesisOptions options;
    options.orientations = settings_.orientations;
    options.n13c_mask = settings_.n13c_mask;
    options.narrow = settings_.narrow;

    const bool needs_copy =
        settings_.weighting == LineWeighting::saturation && params.alpha.value != 1.0;
    const auto cached = lookup(params);
    const TransitionSet* set = cached.get();
    TransitionSet adjusted;
    if (needs_copy) {
        adjusted = transitions(params);
        set = &adjusted;
    }
    return synthesize_spectrum(*set, weights, shape, settings_.bath_enabled ? &bath : nullptr, grid,
                               options)
        .values;
}

}  // namespace nvspec
