#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "nvspec/spectrum.hpp"
#include "nvspec/transitions.hpp"

namespace nvspec {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Header `frequency_mhz,value`, one row per point.
void write_spectrum_csv(std::ostream& out, const SpectrumCurve& curve);
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumCurve& curve);

/// Accepts blank lines and `#` comments anywhere; the first other line must be
/// the header. Errors are InputError with where() = "<source>:<line>".
SpectrumCurve read_spectrum_csv(std::istream& in, const std::string& source = "<stream>");
SpectrumCurve read_spectrum_csv(const std::filesystem::path& path);

/// Columns: orientation,n13c,from,to,f_mhz,rabi,amplitude,delta_ms.
void write_transitions_csv(std::ostream& out, std::span<const Transition> lines);
void write_transitions_csv(const std::filesystem::path& path, std::span<const Transition> lines);

}  // namespace nvspec
