#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dgiga/geometry.hpp"
#include "dgiga/potentials.hpp"

namespace dgiga {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PatchSpec {
    Box box;
    std::array<int, 3> degree{2, 2, 2};
    std::array<int, 3> elements{1, 1, 1};
};

/// One experiment: domain decomposition, per-patch spline data, nuclei,
/// discretization knobs, refinement plan, solver and SCF settings, and the
/// reference used by convergence studies.
struct ExperimentConfig {
    std::string problem = "linear";  // linear | gp | ks-lda | source
    int dim = 2;
    Box domain;
    std::vector<PatchSpec> patches;
    NucleusSet nuclei;

    double c_sigma = -1.0;   // < 0: automatic 10 (p_max+1)^2
    int quad_order = 0;      // 0: automatic p + 2
    int grading_levels = 0;  // 0: automatic

    int refine_levels = 3;
    std::string refine_mode = "uniform";  // uniform | multiscale
    double refine_exponent = 2.0;

    int eigen_k = 4;
    double eigen_tol = 1e-9;
    std::optional<double> eigen_shift;

    double scf_tol = 1e-8;
    int scf_max_iter = 200;
    double scf_mixing = 0.3;
    bool scf_correlation = true;
    double gp_scale = 1.0;

    std::string reference_kind = "analytic-box";  // value | analytic-box | numeric
    std::vector<double> reference_values;
    double regularity = 0.0;  // expected Sobolev order annotation (0: none)

    int linecut_axis = 0;
    double linecut_lo = 0.0, linecut_hi = 0.0;  // 0,0: whole domain extent
    unsigned seed = 20240811;

    static ExperimentConfig parse(const std::string& text);
    std::string serialize() const;

    /// Copy with every per-patch degree replaced (for p-sweeps).
    ExperimentConfig with_degree(int p) const {
        ExperimentConfig c = *this;
        for (auto& ps : c.patches) ps.degree = {p, p, p};
        return c;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct KeyValues {
    std::map<std::string, std::pair<std::string, int>> kv;  // value, line

    const std::string* find(const std::string& key) const {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second.first;
    }

    std::string require(const std::string& key) const {
        const auto* v = find(key);
        if (!v) throw ConfigError("config: missing key '" + key + "'");
        return *v;
    }

    double number(const std::string& key, const std::string& raw) const {
        std::istringstream is(raw);
        double v = 0.0;
        if (!(is >> v)) err(key, "expected a number, got '" + raw + "'");
        return v;
    }

    std::vector<double> numbers(const std::string& key, const std::string& raw) const {
        std::istringstream is(raw);
        std::vector<double> out;
        double v = 0.0;
        while (is >> v) out.push_back(v);
        if (out.empty()) err(key, "expected numbers, got '" + raw + "'");
        return out;
    }

    [[noreturn]] void err(const std::string& key, const std::string& what) const {
        const auto it = kv.find(key);
        const int line = it == kv.end() ? 0 : it->second.second;
        throw ConfigError("config line " + std::to_string(line) + ", key '" + key + "': " + what);
    }
};

}  // namespace detail

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    detail::KeyValues kvs;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (kvs.kv.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
        kvs.kv[key] = {value, lineno};
    }

    ExperimentConfig c;
    c.problem = kvs.require("problem");
    if (c.problem != "linear" && c.problem != "gp" && c.problem != "ks-lda" &&
        c.problem != "source")
        kvs.err("problem", "unknown problem kind '" + c.problem + "'");
    c.dim = static_cast<int>(kvs.number("dim", kvs.require("dim")));
    if (c.dim < 1 || c.dim > 3) kvs.err("dim", "dim must be 1, 2 or 3");

    {
        const auto v = kvs.numbers("domain", kvs.require("domain"));
        if (static_cast<int>(v.size()) != 2 * c.dim)
            kvs.err("domain", "expected " + std::to_string(2 * c.dim) + " numbers");
        for (int a = 0; a < c.dim; ++a) {
            c.domain.lo[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(a)];
            c.domain.hi[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(a + c.dim)];
        }
    }

    const int np = static_cast<int>(kvs.number("patches", kvs.require("patches")));
    if (np < 1) kvs.err("patches", "need at least one patch");
    int default_degree = 2;
    if (const auto* v = kvs.find("degree")) default_degree = static_cast<int>(kvs.number("degree", *v));
    for (int i = 0; i < np; ++i) {
        const std::string pre = "patch." + std::to_string(i) + ".";
        PatchSpec ps;
        {
            const auto v = kvs.numbers(pre + "box", kvs.require(pre + "box"));
            if (static_cast<int>(v.size()) != 2 * c.dim)
                kvs.err(pre + "box", "expected " + std::to_string(2 * c.dim) + " numbers");
            for (int a = 0; a < c.dim; ++a) {
                ps.box.lo[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(a)];
                ps.box.hi[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(a + c.dim)];
            }
        }
        ps.degree = {default_degree, default_degree, default_degree};
        if (const auto* v = kvs.find(pre + "degree")) {
            const auto d = kvs.numbers(pre + "degree", *v);
            if (static_cast<int>(d.size()) != c.dim && d.size() != 1)
                kvs.err(pre + "degree", "expected 1 or dim numbers");
            for (int a = 0; a < c.dim; ++a)
                ps.degree[static_cast<std::size_t>(a)] =
                    static_cast<int>(d[d.size() == 1 ? 0 : static_cast<std::size_t>(a)]);
        }
        {
            const auto e = kvs.numbers(pre + "elements", kvs.require(pre + "elements"));
            if (static_cast<int>(e.size()) != c.dim && e.size() != 1)
                kvs.err(pre + "elements", "expected 1 or dim numbers");
            for (int a = 0; a < c.dim; ++a) {
                ps.elements[static_cast<std::size_t>(a)] =
                    static_cast<int>(e[e.size() == 1 ? 0 : static_cast<std::size_t>(a)]);
                if (ps.elements[static_cast<std::size_t>(a)] < 1)
                    kvs.err(pre + "elements", "element counts must be positive");
            }
        }
        c.patches.push_back(ps);
    }

    int nn = 0;
    if (const auto* v = kvs.find("nuclei")) nn = static_cast<int>(kvs.number("nuclei", *v));
    for (int k = 0; k < nn; ++k) {
        const std::string pre = "nucleus." + std::to_string(k) + ".";
        Nucleus nk;
        nk.charge = kvs.number(pre + "charge", kvs.require(pre + "charge"));
        if (nk.charge <= 0) kvs.err(pre + "charge", "charge must be positive");
        const auto p = kvs.numbers(pre + "pos", kvs.require(pre + "pos"));
        if (static_cast<int>(p.size()) != c.dim) kvs.err(pre + "pos", "expected dim numbers");
        for (int a = 0; a < c.dim; ++a) nk.position[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a)];
        c.nuclei.nuclei.push_back(nk);
    }
    for (std::size_t i = 0; i < c.nuclei.nuclei.size(); ++i)
        for (std::size_t j = i + 1; j < c.nuclei.nuclei.size(); ++j)
            if (c.nuclei.nuclei[i].position == c.nuclei.nuclei[j].position)
                kvs.err("nucleus." + std::to_string(j) + ".pos", "duplicate nucleus position");

    auto opt_num = [&](const char* key, double dflt, bool allow_auto = true) {
        const auto* v = kvs.find(key);
        if (!v) return dflt;
        if (allow_auto && *v == "auto") return dflt;
        return kvs.number(key, *v);
    };
    c.c_sigma = opt_num("penalty.c_sigma", -1.0);
    c.quad_order = static_cast<int>(opt_num("quad.order", 0));
    c.grading_levels = static_cast<int>(opt_num("quad.grading_levels", 0));
    c.refine_levels = static_cast<int>(opt_num("refine.levels", 3, false));
    if (c.refine_levels < 1) kvs.err("refine.levels", "need at least one level");
    if (const auto* v = kvs.find("refine.mode")) c.refine_mode = *v;
    if (c.refine_mode != "uniform" && c.refine_mode != "multiscale")
        kvs.err("refine.mode", "expected uniform or multiscale");
    c.refine_exponent = opt_num("refine.exponent", 2.0, false);
    if (c.refine_exponent < 1.0) kvs.err("refine.exponent", "exponent must be >= 1");
    c.eigen_k = static_cast<int>(opt_num("eigen.k", 4, false));
    if (c.eigen_k < 1) kvs.err("eigen.k", "k must be >= 1");
    c.eigen_tol = opt_num("eigen.tol", 1e-9, false);
    if (const auto* v = kvs.find("eigen.shift"))
        if (*v != "auto") c.eigen_shift = kvs.number("eigen.shift", *v);
    c.scf_tol = opt_num("scf.tol", 1e-8, false);
    c.scf_max_iter = static_cast<int>(opt_num("scf.max_iter", 200, false));
    c.scf_mixing = opt_num("scf.mixing", 0.3, false);
    if (const auto* v = kvs.find("scf.correlation")) {
        if (*v == "on" || *v == "true")
            c.scf_correlation = true;
        else if (*v == "off" || *v == "false")
            c.scf_correlation = false;
        else
            kvs.err("scf.correlation", "expected on/off");
    }
    c.gp_scale = opt_num("gp.scale", 1.0, false);
    if (const auto* v = kvs.find("reference.kind")) c.reference_kind = *v;
    if (c.reference_kind != "value" && c.reference_kind != "analytic-box" &&
        c.reference_kind != "numeric")
        kvs.err("reference.kind", "expected value, analytic-box or numeric");
    if (const auto* v = kvs.find("reference.values"))
        c.reference_values = kvs.numbers("reference.values", *v);
    if (c.reference_kind == "value" && c.reference_values.empty())
        kvs.err("reference.kind", "reference.kind=value requires reference.values");
    c.regularity = opt_num("reference.regularity", 0.0, false);
    c.linecut_axis = static_cast<int>(opt_num("linecut.axis", 0, false));
    if (c.linecut_axis < 0 || c.linecut_axis >= c.dim)
        kvs.err("linecut.axis", "axis out of range");
    if (const auto* v = kvs.find("linecut.range")) {
        const auto r = kvs.numbers("linecut.range", *v);
        if (r.size() != 2) kvs.err("linecut.range", "expected two numbers");
        c.linecut_lo = r[0];
        c.linecut_hi = r[1];
    }
    c.seed = static_cast<unsigned>(opt_num("seed", 20240811, false));

    // structural validation via the layout builder (throws on overlap/gap
    // or a nucleus on a patch boundary)
    std::vector<Box> boxes;
    for (const auto& ps : c.patches) boxes.push_back(ps.box);
    PatchLayout::build(c.dim, c.domain, boxes, c.nuclei.positions());
    return c;
}

inline std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "# dgiga-cfg v1\n";
    os << "problem = " << problem << "\n";
    os << "dim = " << dim << "\n";
    os << "domain =";
    for (int a = 0; a < dim; ++a) os << " " << domain.lo[static_cast<std::size_t>(a)];
    for (int a = 0; a < dim; ++a) os << " " << domain.hi[static_cast<std::size_t>(a)];
    os << "\n";
    os << "patches = " << patches.size() << "\n";
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const auto& ps = patches[i];
        os << "patch." << i << ".box =";
        for (int a = 0; a < dim; ++a) os << " " << ps.box.lo[static_cast<std::size_t>(a)];
        for (int a = 0; a < dim; ++a) os << " " << ps.box.hi[static_cast<std::size_t>(a)];
        os << "\n";
        os << "patch." << i << ".degree =";
        for (int a = 0; a < dim; ++a) os << " " << ps.degree[static_cast<std::size_t>(a)];
        os << "\n";
        os << "patch." << i << ".elements =";
        for (int a = 0; a < dim; ++a) os << " " << ps.elements[static_cast<std::size_t>(a)];
        os << "\n";
    }
    os << "nuclei = " << nuclei.nuclei.size() << "\n";
    for (std::size_t k = 0; k < nuclei.nuclei.size(); ++k) {
        os << "nucleus." << k << ".charge = " << nuclei.nuclei[k].charge << "\n";
        os << "nucleus." << k << ".pos =";
        for (int a = 0; a < dim; ++a)
            os << " " << nuclei.nuclei[k].position[static_cast<std::size_t>(a)];
        os << "\n";
    }
    if (c_sigma >= 0)
        os << "penalty.c_sigma = " << c_sigma << "\n";
    else
        os << "penalty.c_sigma = auto\n";
    os << "quad.order = " << (quad_order > 0 ? std::to_string(quad_order) : "auto") << "\n";
    os << "quad.grading_levels = "
       << (grading_levels > 0 ? std::to_string(grading_levels) : "auto") << "\n";
    os << "refine.levels = " << refine_levels << "\n";
    os << "refine.mode = " << refine_mode << "\n";
    os << "refine.exponent = " << refine_exponent << "\n";
    os << "eigen.k = " << eigen_k << "\n";
    os << "eigen.tol = " << eigen_tol << "\n";
    if (eigen_shift)
        os << "eigen.shift = " << *eigen_shift << "\n";
    else
        os << "eigen.shift = auto\n";
    os << "scf.tol = " << scf_tol << "\n";
    os << "scf.max_iter = " << scf_max_iter << "\n";
    os << "scf.mixing = " << scf_mixing << "\n";
    os << "scf.correlation = " << (scf_correlation ? "on" : "off") << "\n";
    os << "gp.scale = " << gp_scale << "\n";
    os << "reference.kind = " << reference_kind << "\n";
    if (!reference_values.empty()) {
        os << "reference.values =";
        for (const double v : reference_values) os << " " << v;
        os << "\n";
    }
    os << "reference.regularity = " << regularity << "\n";
    os << "linecut.axis = " << linecut_axis << "\n";
    if (linecut_lo != 0.0 || linecut_hi != 0.0)
        os << "linecut.range = " << linecut_lo << " " << linecut_hi << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

}  // namespace dgiga
