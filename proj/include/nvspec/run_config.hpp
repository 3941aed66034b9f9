#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "nvspec/fitting.hpp"
#include "nvspec/full_model.hpp"

namespace nvspec {

struct GridSpec {
    double start = 2600.0;  // MHz
    double stop = 3140.0;
    double step = 0.2;
};

struct OutputPaths {
    std::string spectrum;
    std::string transitions;
    std::string summary;
    std::string report;
    std::string curve;
    std::string svg;
};

/// Seven-Gaussian settings; unset centers come from the full model.
struct Gauss7Config {
    std::optional<double> f00, f10, f11, f20, f23;
    std::optional<double> sigma;
    double offset21 = 2.0;
    double offset22 = 31.0;
};

struct RunConfig {
    /// Physical values, free/fixed flags and bounds.
    FitParams params;
    FullModelSettings model;
    GridSpec grid;
    FitModelKind fit_model = FitModelKind::full;
    int max_iterations = 200;
    double systematic_p = 0.005;
    Gauss7Config gauss7;
    /// Natural-abundance spectrum used to seed b_mag, theta and phi.
    std::string reference_data;
    OutputPaths outputs;
    /// Whether level / scale were given explicitly (otherwise estimated from data).
    bool level_given = false;
    bool scale_given = false;
};

/// `--set`-style override: dotted key path and a JSON value (bare words are
/// taken as strings).
struct ConfigOverride {
    std::string key_path;
    std::string value;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// InputError whose where() is the offending key path. An empty document
/// (or "{}") yields all defaults.
RunConfig parse_config(std::string_view json_text, std::span<const ConfigOverride> overrides = {});

/// Reads and parses a config file; parse errors report the file name.
RunConfig load_config(const std::filesystem::path& path, std::span<const ConfigOverride> overrides = {});

}  // namespace nvspec
