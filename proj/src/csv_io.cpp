#include "nvspec/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "nvspec/errors.hpp"

namespace nvspec {

namespace {

constexpr std::string_view kSpectrumHeader = "frequency_mhz,value";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_field(std::string_view text, const std::string& where, const char* column) {
    const std::string_view t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw InputError(where, std::string("cannot parse ") + column + " '" + std::string(t) + "'");
    }
    if (!std::isfinite(value)) throw InputError(where, std::string(column) + " is not finite");
    return value;
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(path.string(), "cannot open for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw InputError(path.string(), "write failed");
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buf, ptr);
}

void write_spectrum_csv(std::ostream& out, const SpectrumCurve& curve) {
    validate(curve);
    out << kSpectrumHeader << '\n';
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << format_number(curve.freqs[i]) << ',' << format_number(curve.values[i]) << '\n';
    }
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumCurve& curve) {
    std::ofstream out = open_for_writing(path);
    write_spectrum_csv(out, curve);
    finish(out, path);
}

SpectrumCurve read_spectrum_csv(std::istream& in, const std::string& source) {
    SpectrumCurve curve;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (!header_seen) {
            if (t != kSpectrumHeader) {
                throw InputError(where, "expected header '" + std::string(kSpectrumHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string_view::npos || t.find(',', comma + 1) != std::string_view::npos) {
            throw InputError(where, "expected exactly two comma-separated fields");
        }
        const double f = parse_field(t.substr(0, comma), where, "frequency_mhz");
        const double v = parse_field(t.substr(comma + 1), where, "value");
        if (!curve.freqs.empty() && !(f > curve.freqs.back())) {
            throw InputError(where, "frequencies must be strictly increasing");
        }
        curve.freqs.push_back(f);
        curve.values.push_back(v);
    }
    if (!header_seen) throw InputError(source, "missing header '" + std::string(kSpectrumHeader) + "'");
    if (curve.freqs.empty()) throw InputError(source, "no data rows");
    return curve;
}

SpectrumCurve read_spectrum_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string(), "cannot open for reading");
    return read_spectrum_csv(in, path.string());
}

void write_transitions_csv(std::ostream& out, std::span<const Transition> lines) {
    out << "orientation,n13c,from,to,f_mhz,rabi,amplitude,delta_ms\n";
    for (const Transition& t : lines) {
        out << t.orientation << ',' << t.n13c << ',' << t.from << ',' << t.to << ','
            << format_number(t.f_mhz) << ',' << format_number(t.rabi) << ','
            << format_number(t.amplitude) << ',' << t.delta_ms << '\n';
    }
}

void write_transitions_csv(const std::filesystem::path& path, std::span<const Transition> lines) {
    std::ofstream out = open_for_writing(path);
    write_transitions_csv(out, lines);
    finish(out, path);
}

}  // namespace nvspec
