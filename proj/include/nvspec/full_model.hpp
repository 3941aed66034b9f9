#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "nvspec/spectrum.hpp"

namespace nvspec {

struct FitParameter {
    double value = 0.0;
    bool fixed = true;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

/// Every parameter of the full forward model.
struct FitParams {
    static constexpr std::size_t kCount = 14;
    static constexpr std::array<std::string_view, kCount> kNames{
        "ex", "ey", "d_prime", "b_mag", "theta", "phi", "xi", "zeta",
        "alpha", "level", "scale", "sigma0", "sigma_b", "p"};

    FitParameter ex{0.0};
    FitParameter ey{0.0};
    FitParameter d_prime{2870.0};
    FitParameter b_mag{0.0, false, 0.0};
    FitParameter theta{0.0};
    FitParameter phi{0.0};
    FitParameter xi{1.5707963267948966};
    FitParameter zeta{0.0};
    FitParameter alpha{1.0, true, 0.0};
    FitParameter level{0.0, false};
    FitParameter scale{1.0, false};
    FitParameter sigma0{1.0, false, 1e-3};
    FitParameter sigma_b{0.0, true, 0.0};
    FitParameter p{0.011, false, 0.0, 1.0};

    FitParameter& operator[](std::size_t i);
    const FitParameter& operator[](std::size_t i) const;
    /// Index of `name`, or kCount when unknown.
    static std::size_t index_of(std::string_view name);
    int free_count() const;
};

/// Throws std::invalid_argument on non-finite values, unordered bounds, values
/// outside their bounds, p bounds outside [0, 1], or no free parameter.
void validate(const FitParams& params);

/// Structural choices of the forward model that are not fitted.
struct FullModelSettings {
    PhysicalConstants constants;
    std::vector<int> orientations{0, 1, 2, 3};
    std::vector<int> n13c_mask{0, 1, 2};
    LineContour contour = LineContour::gaussian_width;
    LineWeighting weighting = LineWeighting::saturation;
    bool bath_enabled = true;
    BathSites bath_sites;
    NarrowLineParams narrow;
    double b_mw = 1.0;
    double rabi_floor = 1e-6;
    bool include_nitrogen = true;
};

SpinSystemConfig spin_config_from(const FitParams& params, const FullModelSettings& settings);
LineShapeParams line_shape_from(const FitParams& params, const FullModelSettings& settings);

/// Forward model F(f; params). Transition tables are cached on the
/// parameters that enter the Hamiltonian (ex, ey, d_prime, b_mag, theta, phi,
/// xi, zeta), so line-shape-only changes reuse them. Not thread-safe: give
/// each fit its own instance.
class FullModel {
public:
    explicit FullModel(FullModelSettings settings = {});

    const FullModelSettings& settings() const { return settings_; }

    std::vector<double> evaluate(const FitParams& params, std::span<const double> grid) const;

    /// Transition set for the Hamiltonian parameters of `params`, with
    /// amplitudes for params.alpha.
    TransitionSet transitions(const FitParams& params) const;

    /// Number of transition-set builds so far (cache misses).
    std::size_t builds() const { return builds_; }
    std::size_t cache_hits() const { return hits_; }

private:
    struct CacheEntry {
        std::array<double, 8> key;
        std::shared_ptr<const TransitionSet> set;
    };

    std::shared_ptr<const TransitionSet> lookup(const FitParams& params) const;

    FullModelSettings settings_;
    mutable std::vector<CacheEntry> cache_;  // most recent first
    mutable std::size_t builds_ = 0;
    mutable std::size_t hits_ = 0;
};

}  // namespace nvspec
