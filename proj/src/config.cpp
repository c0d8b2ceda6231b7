#include "igc/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace igc {

std::array<int, 3> RunConfig::elements(int dim) const
{
    std::array<int, 3> e{1, 1, 1};
    for (int d = 0; d < dim; ++d) e[d] = n.empty() ? 1 : (n.size() == 1 ? n[0] : n[d]);
    return e;
}

namespace {

std::string trim(std::string s)
{
    const auto ws = " \t\r\n";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

std::optional<int> to_int(const std::string& s)
{
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) return std::nullopt;
    return v;
}

std::optional<double> to_double(const std::string& s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) return std::nullopt;
    return v;
}

std::optional<bool> to_bool(const std::string& s)
{
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    return std::nullopt;
}

std::optional<std::vector<int>> to_int_list(const std::string& s)
{
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = to_int(trim(item));
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    if (out.empty()) return std::nullopt;
    return out;
}

struct Entry {
    std::string value;
    int line;
};

const std::map<std::string, std::string>& key_sections()
{
    static const std::map<std::string, std::string> k{
        {"case", "case"},
        {"n", "case"},
        {"k", "case"},
        {"dt", "case"},
        {"t_final", "case"},
        {"init", "case"},
        {"meshes", "case"},
        {"degrees", "case"},
        {"nonlinear", "stabilization"},
        {"linear", "stabilization"},
        {"C_RB", "stabilization"},
        {"C_max", "stabilization"},
        {"C_lin", "stabilization"},
        {"prandtl", "stabilization"},
        {"regularization", "stabilization"},
        {"normalization", "stabilization"},
        {"bdf_startup", "stabilization"},
        {"dir", "output"},
        {"dump_every", "output"},
        {"dump_resolution", "output"},
        {"diag_every", "output"},
        {"reference_cells", "output"},
    };
    return k;
}

std::string join(const std::vector<std::string>& v, const std::string& sep)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text)
{
    std::vector<std::string> errors;
    std::map<std::string, Entry> raw;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back(fmt::format("line {}: malformed section header '{}'", lineno, line));
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section != "case" && section != "stabilization" && section != "output") {
                errors.push_back(fmt::format("line {}: unknown section [{}]", lineno, section));
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(fmt::format("line {}: expected key = value", lineno));
            continue;
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto it = key_sections().find(key);
        if (it == key_sections().end()) {
            errors.push_back(fmt::format("line {}: unknown key '{}'", lineno, key));
            continue;
        }
        if (!section.empty() && it->second != section) {
            errors.push_back(fmt::format("line {}: key '{}' belongs in [{}], not [{}]", lineno, key, it->second, section));
            continue;
        }
        if (raw.count(key)) {
            errors.push_back(fmt::format("line {}: duplicate key '{}' (first on line {})", lineno, key, raw[key].line));
            continue;
        }
        raw[key] = {value, lineno};
    }

    std::vector<std::string> missing;
    if (!raw.count("case")) missing.push_back("case");
    if (!raw.count("n") && !raw.count("meshes")) missing.push_back("n");
    if (!raw.count("k") && !raw.count("degrees")) missing.push_back("k");
    if (!missing.empty()) errors.push_back("missing required keys: " + join(missing, ", "));

    auto fail = [&]() {
        throw ConfigError(join(errors, "\n"));
    };
    if (!raw.count("case")) fail();

    RunConfig c;
    c.case_name = raw["case"].value;
    CaseDefinition def;
    try {
        def = builtin_case(c.case_name);
    } catch (const DomainError&) {
        errors.push_back(fmt::format("line {}: unknown case '{}' (see case-list)", raw["case"].line, c.case_name));
        fail();
    }
    const int dim = def.dim();
    const bool euler = def.law.is_euler();

    auto get_int = [&](const std::string& key, int& dst, int min) {
        if (!raw.count(key)) return;
        const auto& e = raw[key];
        const auto v = to_int(e.value);
        if (!v) {
            errors.push_back(fmt::format("line {}: '{}' expects an integer, got '{}'", e.line, key, e.value));
        } else if (*v < min) {
            errors.push_back(fmt::format("line {}: '{}' must be >= {}", e.line, key, min));
        } else {
            dst = *v;
        }
    };
    auto get_double = [&](const std::string& key, double& dst, bool strictly_positive) {
        if (!raw.count(key)) return;
        const auto& e = raw[key];
        const auto v = to_double(e.value);
        if (!v) {
            errors.push_back(fmt::format("line {}: '{}' expects a number, got '{}'", e.line, key, e.value));
        } else if (strictly_positive ? !(*v > 0.0) : !(*v >= 0.0)) {
            errors.push_back(fmt::format("line {}: '{}' must be {}", e.line, key, strictly_positive ? "> 0" : ">= 0"));
        } else {
            dst = *v;
        }
    };
    auto get_bool = [&](const std::string& key, bool& dst) {
        if (!raw.count(key)) return;
        const auto& e = raw[key];
        const auto v = to_bool(e.value);
        if (!v) {
            errors.push_back(fmt::format("line {}: '{}' expects true or false, got '{}'", e.line, key, e.value));
        } else {
            dst = *v;
        }
    };
    auto get_list = [&](const std::string& key, std::vector<int>& dst) {
        if (!raw.count(key)) return;
        const auto& e = raw[key];
        const auto v = to_int_list(e.value);
        if (!v) {
            errors.push_back(fmt::format("line {}: '{}' expects comma-separated integers, got '{}'", e.line, key, e.value));
        } else {
            dst = *v;
        }
    };
    auto get_enum = [&](const std::string& key, auto parse, auto& dst) {
        if (!raw.count(key)) return;
        const auto& e = raw[key];
        try {
            dst = parse(e.value);
        } catch (const Error& ex) {
            errors.push_back(fmt::format("line {}: {}", e.line, ex.what()));
        }
    };

    // case
    get_list("n", c.n);
    if (raw.count("n") && !c.n.empty()) {
        if (c.n.size() != 1 && int(c.n.size()) != dim) {
            errors.push_back(fmt::format("line {}: 'n' needs 1 or {} values for this {}D case", raw["n"].line, dim, dim));
        }
        for (int v : c.n) {
            if (v < 1) errors.push_back(fmt::format("line {}: 'n' entries must be >= 1", raw["n"].line));
        }
    }
    get_int("k", c.degree, 1);
    c.dt = def.dt;
    c.t_final = def.t_final;
    get_double("dt", c.dt, true);
    get_double("t_final", c.t_final, false);
    c.init = def.init_policy;
    get_enum("init", parse_init_policy, c.init);
    get_list("meshes", c.meshes);
    get_list("degrees", c.degrees);
    if (raw.count("meshes")) {
        if (c.meshes.size() < 2) errors.push_back(fmt::format("line {}: 'meshes' needs at least two entries", raw["meshes"].line));
        for (int v : c.meshes) {
            if (v < 1) errors.push_back(fmt::format("line {}: 'meshes' entries must be >= 1", raw["meshes"].line));
        }
    }
    if (c.degrees.empty() && c.degree > 0) c.degrees = {c.degree};
    if (c.degree == 0 && !c.degrees.empty()) c.degree = c.degrees.front();
    if (c.n.empty() && !c.meshes.empty()) c.n = {c.meshes.back()};

    // stabilization
    get_bool("nonlinear", c.nonlinear);
    get_bool("linear", c.linear);
    c.regularization = def.regularization;
    if (raw.count("regularization")) {
        if (!euler) {
            errors.push_back(fmt::format("line {}: 'regularization' only applies to Euler cases", raw["regularization"].line));
        } else {
            get_enum("regularization", parse_regularization, c.regularization);
        }
    }
    c.constants = euler ? euler_constants(c.regularization, dim) : def.constants;
    get_double("C_RB", c.constants.c_rb, true);
    get_double("C_max", c.constants.c_max, true);
    get_double("C_lin", c.constants.c_lin, true);
    if (raw.count("prandtl")) {
        if (!euler || c.regularization != Regularization::guermond_popov) {
            errors.push_back(fmt::format("line {}: 'prandtl' only applies to Euler with regularization = gp", raw["prandtl"].line));
        } else {
            get_double("prandtl", c.constants.prandtl, true);
        }
    }
    get_enum("normalization", parse_normalization, c.normalization);
    get_enum("bdf_startup", parse_bdf_startup, c.startup);
    if (!c.linear && raw.count("C_lin")) {
        errors.push_back(fmt::format("line {}: 'C_lin' given but linear stabilization is off", raw["C_lin"].line));
    }
    for (const char* key : {"C_RB", "C_max", "normalization", "bdf_startup"}) {
        if (!c.nonlinear && raw.count(key)) {
            errors.push_back(fmt::format("line {}: '{}' given but nonlinear stabilization is off", raw[key].line, key));
        }
    }
    if (c.nonlinear || c.linear) {
        for (int k : c.degrees) {
            if (k < 2) {
                const int ln = raw.count("degrees") ? raw["degrees"].line : raw["k"].line;
                errors.push_back(fmt::format("line {}: stabilization needs degree >= 2 (got {})", ln, k));
            }
        }
    }

    // output
    if (raw.count("dir")) {
        c.out_dir = raw["dir"].value;
        if (c.out_dir.empty()) errors.push_back(fmt::format("line {}: 'dir' is empty", raw["dir"].line));
    }
    get_int("dump_every", c.dump_every, 0);
    get_int("dump_resolution", c.dump_resolution, 0);
    if (raw.count("dump_resolution") && c.dump_resolution == 1) {
        errors.push_back(fmt::format("line {}: 'dump_resolution' must be 0 (auto) or >= 2", raw["dump_resolution"].line));
    }
    get_int("diag_every", c.diag_every, 0);
    get_int("reference_cells", c.reference_cells, 0);

    if (!errors.empty()) fail();
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c)
{
    const auto def = builtin_case(c.case_name);
    const bool euler = def.law.is_euler();
    auto list = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    std::string out = "[case]\n";
    out += fmt::format("case = {}\n", c.case_name);
    out += fmt::format("n = {}\n", list(c.n));
    out += fmt::format("k = {}\n", c.degree);
    out += fmt::format("dt = {:.17g}\n", c.dt);
    out += fmt::format("t_final = {:.17g}\n", c.t_final);
    out += fmt::format("init = {}\n", to_string(c.init));
    if (!c.meshes.empty()) out += fmt::format("meshes = {}\n", list(c.meshes));
    if (!c.degrees.empty()) out += fmt::format("degrees = {}\n", list(c.degrees));
    out += "\n[stabilization]\n";
    out += fmt::format("nonlinear = {}\n", c.nonlinear);
    out += fmt::format("linear = {}\n", c.linear);
    if (euler) out += fmt::format("regularization = {}\n", to_string(c.regularization));
    if (c.nonlinear) {
        out += fmt::format("C_RB = {:.17g}\n", c.constants.c_rb);
        out += fmt::format("C_max = {:.17g}\n", c.constants.c_max);
        out += fmt::format("normalization = {}\n", to_string(c.normalization));
        out += fmt::format("bdf_startup = {}\n", to_string(c.startup));
    }
    if (c.linear) out += fmt::format("C_lin = {:.17g}\n", c.constants.c_lin);
    if (euler && c.regularization == Regularization::guermond_popov) {
        out += fmt::format("prandtl = {:.17g}\n", c.constants.prandtl);
    }
    out += "\n[output]\n";
    out += fmt::format("dir = {}\n", c.out_dir);
    out += fmt::format("dump_every = {}\n", c.dump_every);
    out += fmt::format("dump_resolution = {}\n", c.dump_resolution);
    out += fmt::format("diag_every = {}\n", c.diag_every);
    out += fmt::format("reference_cells = {}\n", c.reference_cells);
    return out;
}

CaseDefinition resolved_case(const RunConfig& c)
{
    auto def = builtin_case(c.case_name);
    def.dt = c.dt;
    def.t_final = c.t_final;
    def.constants = c.constants;
    def.regularization = c.regularization;
    def.init_policy = c.init;
    return def;
}

SolverOptions resolved_options(const RunConfig& c)
{
    SolverOptions o;
    o.nonlinear = c.nonlinear;
    o.linear = c.linear;
    o.constants = c.constants;
    o.regularization = c.regularization;
    o.init = c.init;
    o.normalization = c.normalization;
    o.startup = c.startup;
    return o;
}

}  // namespace igc
