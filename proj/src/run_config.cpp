#include "nvspec/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nvspec/errors.hpp"

namespace nvspec {

namespace {

using json = nlohmann::json;

std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

// Tracks which keys of one JSON object were consumed; anything else is rejected.
class ObjectReader {
public:
    ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw InputError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = node_.find(key);
        if (it == node_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    std::optional<double> number(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) throw InputError(path(key), "expected a number");
        const double d = v->get<double>();
        if (!std::isfinite(d)) throw InputError(path(key), "must be finite");
        return d;
    }

    std::optional<int> integer(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) throw InputError(path(key), "expected an integer");
        return v->get<int>();
    }

    std::optional<bool> boolean(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) throw InputError(path(key), "expected true or false");
        return v->get<bool>();
    }

    std::optional<std::string> string(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) throw InputError(path(key), "expected a string");
        return v->get<std::string>();
    }

    std::optional<std::vector<int>> int_list(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_array()) throw InputError(path(key), "expected an array of integers");
        std::vector<int> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            const json& e = (*v)[i];
            if (!e.is_number_integer()) {
                throw InputError(path(key) + "[" + std::to_string(i) + "]", "expected an integer");
            }
            out.push_back(e.get<int>());
        }
        return out;
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) throw InputError(path(it.key()), "unknown key");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& where, const std::string& what) {
    if (!ok) throw InputError(where, what);
}

void read_number(ObjectReader& r, const std::string& key, double& target) {
    if (auto v = r.number(key)) target = *v;
}

void read_constants(const json& node, PhysicalConstants& c) {
    ObjectReader r(node, "constants");
    read_number(r, "zfs_mhz", c.zfs);
    read_number(r, "gamma_e", c.gamma_e);
    read_number(r, "gamma_n", c.gamma_n);
    read_number(r, "a_n_parallel_mhz", c.a_n_parallel);
    read_number(r, "a_n_perp_mhz", c.a_n_perp);
    read_number(r, "quadrupole_mhz", c.quadrupole);
    if (const json* v = r.get("a13c_principal_mhz")) {
        require(v->is_array() && v->size() == 3 &&
                    std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number(); }),
                r.path("a13c_principal_mhz"), "expected three numbers");
        c.a13c_principal = Vec3((*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>());
    }
    read_number(r, "bath_azz_group1_mhz", c.bath_azz_group1);
    read_number(r, "bath_azz_group2_mhz", c.bath_azz_group2);
    if (const json* v = r.get("raman_coeffs")) {
        require(v->is_array() && v->size() == 3 &&
                    std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number(); }),
                r.path("raman_coeffs"), "expected three numbers");
        c.raman_coeffs = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
    }
    read_number(r, "strain_raman_coeff", c.strain_raman_coeff);
    read_number(r, "zpl_strain_coeff", c.zpl_strain_coeff);
    read_number(r, "ir_nitrogen_coeff", c.ir_nitrogen_coeff);
    r.finish();
    require(c.gamma_e > 0.0, "constants.gamma_e", "must be > 0");
    require(c.strain_raman_coeff > 0.0, "constants.strain_raman_coeff", "must be > 0");
    require(c.zpl_strain_coeff > 0.0, "constants.zpl_strain_coeff", "must be > 0");
}

void read_fit(const json& node, RunConfig& cfg) {
    ObjectReader r(node, "fit");
    if (const json* free = r.get("free")) {
        require(free->is_array(), r.path("free"), "expected an array of parameter names");
        std::vector<bool> is_free(FitParams::kCount, false);
        for (std::size_t i = 0; i < free->size(); ++i) {
            const std::string where = r.path("free") + "[" + std::to_string(i) + "]";
            require((*free)[i].is_string(), where, "expected a parameter name");
            const std::size_t idx = FitParams::index_of((*free)[i].get<std::string>());
            require(idx < FitParams::kCount, where,
                    "unknown parameter '" + (*free)[i].get<std::string>() + "'");
            is_free[idx] = true;
        }
        for (std::size_t i = 0; i < FitParams::kCount; ++i) cfg.params[i].fixed = !is_free[i];
    }
    if (const json* bounds = r.get("bounds")) {
        require(bounds->is_object(), r.path("bounds"), "expected an object of [lower, upper] pairs");
        for (auto it = bounds->begin(); it != bounds->end(); ++it) {
            const std::string where = r.path("bounds") + "." + it.key();
            const std::size_t idx = FitParams::index_of(it.key());
            require(idx < FitParams::kCount, where, "unknown parameter");
            const json& pair = it.value();
            require(pair.is_array() && pair.size() == 2, where, "expected [lower, upper]");
            FitParameter& q = cfg.params[idx];
            for (std::size_t k = 0; k < 2; ++k) {
                const json& e = pair[k];
                require(e.is_null() || e.is_number(), where, "bounds must be numbers or null");
                const double inf = std::numeric_limits<double>::infinity();
                const double v = e.is_null() ? (k == 0 ? -inf : inf) : e.get<double>();
                (k == 0 ? q.lower : q.upper) = v;
            }
            require(q.lower <= q.upper, where, "lower bound exceeds upper bound");
        }
    }
    if (auto v = r.integer("max_iterations")) {
        require(*v >= 1, r.path("max_iterations"), "must be >= 1");
        cfg.max_iterations = *v;
    }
    if (auto v = r.number("systematic_p")) {
        require(*v >= 0.0, r.path("systematic_p"), "must be >= 0");
        cfg.systematic_p = *v;
    }
    r.finish();
}

void read_gauss7(const json& node, Gauss7Config& g) {
    ObjectReader r(node, "gauss7");
    g.f00 = r.number("f00_mhz");
    g.f10 = r.number("f10_mhz");
    g.f11 = r.number("f11_mhz");
    g.f20 = r.number("f20_mhz");
    g.f23 = r.number("f23_mhz");
    g.sigma = r.number("sigma_mhz");
    if (g.sigma) require(*g.sigma > 0.0, r.path("sigma_mhz"), "must be > 0");
    read_number(r, "offset21_mhz", g.offset21);
    read_number(r, "offset22_mhz", g.offset22);
    r.finish();
}

void read_outputs(const json& node, OutputPaths& out) {
    ObjectReader r(node, "outputs");
    auto read = [&](const char* key, std::string& target) {
        if (auto v = r.string(key)) target = *v;
    };
    read("spectrum", out.spectrum);
    read("transitions", out.transitions);
    read("summary", out.summary);
    read("report", out.report);
    read("curve", out.curve);
    read("svg", out.svg);
    r.finish();
}

RunConfig parse_document(const json& doc) {
    RunConfig cfg;
    ObjectReader r(doc, "");
    FitParams& p = cfg.params;

    read_number(r, "b_gauss", p.b_mag.value);
    require(p.b_mag.value >= 0.0, "b_gauss", "must be >= 0");
    read_number(r, "theta_rad", p.theta.value);
    read_number(r, "phi_rad", p.phi.value);
    read_number(r, "ex_mhz", p.ex.value);
    read_number(r, "ey_mhz", p.ey.value);
    read_number(r, "d_prime_mhz", p.d_prime.value);
    read_number(r, "xi_rad", p.xi.value);
    read_number(r, "zeta_rad", p.zeta.value);
    read_number(r, "alpha", p.alpha.value);
    require(p.alpha.value >= 0.0, "alpha", "must be >= 0");
    read_number(r, "p", p.p.value);
    require(p.p.value >= 0.0 && p.p.value <= 1.0, "p", "must be in [0, 1]");
    if (auto v = r.number("level")) {
        p.level.value = *v;
        cfg.level_given = true;
    }
    if (auto v = r.number("scale")) {
        p.scale.value = *v;
        cfg.scale_given = true;
    }
    read_number(r, "sigma0_mhz", p.sigma0.value);
    require(p.sigma0.value > 0.0, "sigma0_mhz", "must be > 0");
    read_number(r, "sigma_b_mhz", p.sigma_b.value);
    require(p.sigma_b.value >= 0.0, "sigma_b_mhz", "must be >= 0");

    FullModelSettings& m = cfg.model;
    if (const json* c = r.get("constants")) read_constants(*c, m.constants);
    m.bath_sites.azz_group1 = m.constants.bath_azz_group1;
    m.bath_sites.azz_group2 = m.constants.bath_azz_group2;

    if (auto v = r.int_list("orientations")) {
        require(!v->empty(), "orientations", "must not be empty");
        for (std::size_t i = 0; i < v->size(); ++i) {
            require((*v)[i] >= 0 && (*v)[i] < kOrientationCount,
                    "orientations[" + std::to_string(i) + "]", "must be in 0..3");
        }
        std::set<int> unique(v->begin(), v->end());
        require(unique.size() == v->size(), "orientations", "entries must be distinct");
        m.orientations = *v;
    }
    if (auto v = r.int_list("n13c_mask")) {
        require(!v->empty(), "n13c_mask", "must not be empty");
        for (std::size_t i = 0; i < v->size(); ++i) {
            require((*v)[i] >= 0 && (*v)[i] <= kMaxCarbons, "n13c_mask[" + std::to_string(i) + "]",
                    "must be in 0..3");
        }
        std::set<int> unique(v->begin(), v->end());
        require(unique.size() == v->size(), "n13c_mask", "entries must be distinct");
        m.n13c_mask = *v;
    }
    if (const json* g = r.get("grid")) {
        ObjectReader gr(*g, "grid");
        read_number(gr, "start", cfg.grid.start);
        read_number(gr, "stop", cfg.grid.stop);
        read_number(gr, "step", cfg.grid.step);
        gr.finish();
    }
    require(cfg.grid.step > 0.0, "grid.step", "must be > 0");
    require(cfg.grid.stop > cfg.grid.start, "grid.stop", "must exceed grid.start");
    require((cfg.grid.stop - cfg.grid.start) / cfg.grid.step < 1e7, "grid.step",
            "grid would have more than 10^7 points");

    if (auto v = r.string("model")) {
        if (*v == "full") cfg.fit_model = FitModelKind::full;
        else if (*v == "gauss7") cfg.fit_model = FitModelKind::gauss7;
        else throw InputError("model", "expected \"full\" or \"gauss7\"");
    }
    if (auto v = r.string("lineshape")) {
        if (*v == "gaussian_width") m.contour = LineContour::gaussian_width;
        else if (*v == "gaussian_stddev") m.contour = LineContour::gaussian_stddev;
        else if (*v == "lorentzian") m.contour = LineContour::lorentzian;
        else throw InputError("lineshape", "expected \"gaussian_width\", \"gaussian_stddev\" or \"lorentzian\"");
    }
    if (auto v = r.string("weighting")) {
        if (*v == "saturation") m.weighting = LineWeighting::saturation;
        else if (*v == "rabi_squared") m.weighting = LineWeighting::rabi_squared;
        else throw InputError("weighting", "expected \"saturation\" or \"rabi_squared\"");
    }
    if (const json* b = r.get("bath")) {
        ObjectReader br(*b, "bath");
        if (auto v = br.boolean("enabled")) m.bath_enabled = *v;
        if (auto v = br.integer("sites_group1")) {
            require(*v >= 0 && *v <= 6, "bath.sites_group1", "must be in 0..6");
            m.bath_sites.count_group1 = *v;
        }
        if (auto v = br.integer("sites_group2")) {
            require(*v >= 0 && *v <= 3, "bath.sites_group2", "must be in 0..3");
            m.bath_sites.count_group2 = *v;
        }
        br.finish();
    }
    if (const json* n = r.get("narrow")) {
        ObjectReader nr(*n, "narrow");
        if (auto v = nr.boolean("enabled")) m.narrow.enabled = *v;
        read_number(nr, "threshold_mhz_per_g", m.narrow.threshold);
        require(m.narrow.threshold >= 0.0, "narrow.threshold_mhz_per_g", "must be >= 0");
        read_number(nr, "fwhm_mhz", m.narrow.fwhm);
        require(m.narrow.fwhm > 0.0, "narrow.fwhm_mhz", "must be > 0");
        nr.finish();
    }
    if (auto v = r.boolean("nitrogen")) m.include_nitrogen = *v;
    read_number(r, "b_mw_gauss", m.b_mw);
    require(m.b_mw > 0.0, "b_mw_gauss", "must be > 0");
    read_number(r, "rabi_floor", m.rabi_floor);
    require(m.rabi_floor >= 0.0 && m.rabi_floor < 1.0, "rabi_floor", "must be in [0, 1)");

    if (const json* f = r.get("fit")) read_fit(*f, cfg);
    if (const json* g = r.get("gauss7")) read_gauss7(*g, cfg.gauss7);
    if (auto v = r.string("reference_data")) cfg.reference_data = *v;
    if (const json* o = r.get("outputs")) read_outputs(*o, cfg.outputs);
    r.finish();

    for (std::size_t i = 0; i < FitParams::kCount; ++i) {
        const FitParameter& q = p[i];
        if (q.value < q.lower || q.value > q.upper) {
            throw InputError("fit.bounds." + std::string(FitParams::kNames[i]),
                             "initial value " + std::to_string(q.value) + " lies outside the bounds");
        }
    }
    require(p.p.lower >= 0.0 && p.p.upper <= 1.0, "fit.bounds.p", "must lie within [0, 1]");
    require(p.free_count() >= 1, "fit.free", "at least one parameter must be free");
    return cfg;
}

void apply_override(json& doc, const ConfigOverride& o) {
    if (o.key_path.empty()) throw InputError("--set", "empty key path");
    json* node = &doc;
    std::string walked;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = o.key_path.find('.', start);
        const std::string key = o.key_path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        walked = join(walked, key);
        if (key.empty()) throw InputError(o.key_path, "empty key path segment");
        if (!node->is_object()) throw InputError(walked, "cannot set a key inside a non-object");
        if (dot == std::string::npos) {
            json value = json::parse(o.value, nullptr, false);
            (*node)[key] = value.is_discarded() ? json(o.value) : value;
            return;
        }
        json& child = (*node)[key];
        if (child.is_null()) child = json::object();
        node = &child;
        start = dot + 1;
    }
}

}  // namespace

RunConfig parse_config(std::string_view json_text, std::span<const ConfigOverride> overrides) {
    json doc;
    const bool blank = std::all_of(json_text.begin(), json_text.end(),
                                   [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) {
        doc = json::object();
    } else {
        try {
            doc = json::parse(json_text);
        } catch (const json::parse_error& e) {
            throw InputError("<config>", std::string("invalid JSON: ") + e.what());
        }
    }
    for (const ConfigOverride& o : overrides) apply_override(doc, o);
    return parse_document(doc);
}

RunConfig load_config(const std::filesystem::path& path, std::span<const ConfigOverride> overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string(), "cannot open config file");
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str(), overrides);
    } catch (const InputError& e) {
        if (e.where() == "<config>") throw InputError(path.string(), e.what());
        throw;
    }
}

}  // namespace nvspec
