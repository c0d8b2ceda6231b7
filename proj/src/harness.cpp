#include "igc/harness.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include "igc/verification.hpp"

namespace igc {

namespace fs = std::filesystem;

namespace {

// Piecewise-linear interpolation weights between collocation points along one
// direction. Periodic spaces wrap around the last point.
class LinearLocator {
public:
    LinearLocator(const SplineSpace1D& sp, const std::vector<double>& g)
        : periodic_(sp.periodic()), period_(sp.length()), order_(g.size())
    {
        std::iota(order_.begin(), order_.end(), 0);
        std::sort(order_.begin(), order_.end(), [&](int i, int j) { return g[i] < g[j]; });
        x_.reserve(g.size());
        for (int i : order_) x_.push_back(g[i]);
    }

    // Indices (into the unsorted Greville list) and weight of the second.
    void locate(double xq, int& i0, int& i1, double& w) const
    {
        const int n = int(x_.size());
        if (n == 1) {
            i0 = i1 = order_[0];
            w = 0.0;
            return;
        }
        if (periodic_ && (xq < x_.front() || xq >= x_.back())) {
            const double lo = x_.back();
            double hi = x_.front() + period_;
            double q = xq < x_.front() ? xq + period_ : xq;
            i0 = order_[n - 1];
            i1 = order_[0];
            w = hi > lo ? std::clamp((q - lo) / (hi - lo), 0.0, 1.0) : 0.0;
            return;
        }
        auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        int j = int(it - x_.begin());
        j = std::clamp(j, 1, n - 1);
        i0 = order_[j - 1];
        i1 = order_[j];
        const double span = x_[j] - x_[j - 1];
        w = span > 0 ? std::clamp((xq - x_[j - 1]) / span, 0.0, 1.0) : 0.0;
    }

private:
    bool periodic_;
    double period_;
    std::vector<int> order_;
    std::vector<double> x_;
};

double interpolate(const std::vector<LinearLocator>& loc, const Shape& shape, const std::vector<double>& v,
                   const double* x)
{
    const int dim = int(loc.size());
    std::array<int, 3> i0{0, 0, 0}, i1{0, 0, 0};
    std::array<double, 3> w{0, 0, 0};
    for (int d = 0; d < dim; ++d) loc[d].locate(x[d], i0[d], i1[d], w[d]);
    double out = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
        std::array<int, 3> idx{0, 0, 0};
        double weight = 1.0;
        for (int d = 0; d < dim; ++d) {
            const bool hi = corner & (1 << d);
            idx[d] = hi ? i1[d] : i0[d];
            weight *= hi ? w[d] : 1.0 - w[d];
        }
        if (weight != 0.0) out += weight * v[shape.index(idx[0], idx[1], idx[2])];
    }
    return out;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
    if (!out) throw Error("write failed: " + p.string());
}

std::string bc_summary(const CaseDefinition& def)
{
    std::string s;
    const char* axes = "xyz";
    for (int d = 0; d < def.dim(); ++d) {
        s += fmt::format("{}{}: {}/{}", d ? ", " : "", axes[d], to_string(def.bc[d][0]), to_string(def.bc[d][1]));
    }
    return s;
}

}  // namespace

int default_dump_resolution(const RunConfig& c, int dim)
{
    if (c.dump_resolution > 0) return c.dump_resolution;
    const auto e = c.elements(dim);
    const int n = *std::max_element(e.begin(), e.begin() + dim);
    const int cap = dim == 1 ? 2001 : (dim == 2 ? 513 : 65);
    return std::clamp(4 * n + 1, 2, cap);
}

void dump_fields(const SemiDiscreteSystem& sys, const State& state, const ViscosityState& visc, int resolution,
                 const std::string& path)
{
    if (resolution < 2) throw DomainError("dump_fields: resolution must be >= 2");
    const auto& def = sys.definition();
    const auto& space = sys.space();
    const auto& law = def.law;
    const int dim = def.dim();
    const int nc = sys.components();
    const bool gp = law.is_euler() && !visc.kappa.empty();

    std::vector<LinearLocator> loc;
    for (int d = 0; d < dim; ++d) loc.emplace_back(space.space(d), space.greville(d));

    std::string out;
    const char* axes[] = {"x", "y", "z"};
    for (int d = 0; d < dim; ++d) out += fmt::format("{},", axes[d]);
    for (const auto& name : law.component_names()) out += name + ",";
    if (law.is_euler()) {
        for (int d = 0; d < dim; ++d) out += fmt::format("u_{},", axes[d]);
        out += "p,";
    }
    out += "nu_art,";
    if (gp) out += "mu_art,kappa_art,";
    out += "nu_lin\n";

    std::array<int, 3> r{1, 1, 1};
    for (int d = 0; d < dim; ++d) r[d] = resolution;
    std::vector<double> q(nc);
    const Shape shape = space.shape();
    for (int l = 0; l < r[2]; ++l) {
        for (int j = 0; j < r[1]; ++j) {
            for (int i = 0; i < r[0]; ++i) {
                const int ijk[3] = {i, j, l};
                std::array<double, 3> x{0, 0, 0};
                for (int d = 0; d < dim; ++d) {
                    // endpoints exactly, no rounding past the boundary
                    x[d] = ijk[d] == r[d] - 1 ? def.upper[d]
                                                : def.lower[d] + (def.upper[d] - def.lower[d]) * ijk[d] / (r[d] - 1);
                    out += fmt::format("{:.17g},", x[d]);
                }
                for (int e = 0; e < nc; ++e) {
                    q[e] = eval_field(space, state[e], std::span<const double>(x.data(), dim));
                    out += fmt::format("{:.17g},", q[e]);
                }
                if (law.is_euler()) {
                    for (int d = 0; d < dim; ++d) out += fmt::format("{:.17g},", q[1 + d] / q[0]);
                    out += fmt::format("{:.17g},", euler_pressure(q.data(), dim, law.gamma));
                }
                const double nu = interpolate(loc, shape, visc.nu_art, x.data());
                out += fmt::format("{:.17g},", nu);
                if (gp) {
                    out += fmt::format("{:.17g},{:.17g},", nu, interpolate(loc, shape, visc.kappa, x.data()));
                }
                out += fmt::format("{:.17g}\n", interpolate(loc, shape, visc.nu_lin, x.data()));
            }
        }
    }
    write_file(path, out);
}

std::string describe_run(const RunConfig& c)
{
    const auto def = resolved_case(c);
    const int dim = def.dim();
    const auto e = c.elements(dim);
    std::string s;
    s += fmt::format("case        {} ({}, {}D)\n", def.name, def.law.name(), dim);
    s += "domain      ";
    for (int d = 0; d < dim; ++d) s += fmt::format("{}[{}, {}]", d ? " x " : "", def.lower[d], def.upper[d]);
    s += fmt::format("\nboundary    {}\n", bc_summary(def));
    s += "elements    ";
    for (int d = 0; d < dim; ++d) s += fmt::format("{}{}", d ? " x " : "", e[d]);
    s += fmt::format("\ndegree      {}\n", c.degree);
    const long steps = c.t_final > 0 ? long(std::ceil(c.t_final / c.dt - 1e-9)) : 0;
    s += fmt::format("time        dt = {:.6g}, t_final = {:.6g}, {} steps\n", c.dt, c.t_final, steps);
    s += fmt::format("stabilize   nonlinear = {}, linear = {}\n", c.nonlinear, c.linear);
    s += fmt::format("constants   C_RB = {}, C_max = {}, C_lin = {}", c.constants.c_rb, c.constants.c_max,
                     c.constants.c_lin);
    if (def.law.is_euler()) {
        s += fmt::format(", regularization = {}", to_string(c.regularization));
        if (c.regularization == Regularization::guermond_popov) s += fmt::format(", prandtl = {}", c.constants.prandtl);
    }
    s += fmt::format("\nexact       {}\n", exact_for_case(def) ? "available" : "none (finite-volume reference)");
    if (!c.meshes.empty()) {
        s += "converge    meshes ";
        for (std::size_t i = 0; i < c.meshes.size(); ++i) s += fmt::format("{}{}", i ? "," : "", c.meshes[i]);
        s += ", degrees ";
        for (std::size_t i = 0; i < c.degrees.size(); ++i) s += fmt::format("{}{}", i ? "," : "", c.degrees[i]);
        s += "\n";
    }
    s += fmt::format("output      {}\n", c.out_dir);
    return s;
}

int run_case(const RunConfig& c, std::ostream& log)
{
    const auto def = resolved_case(c);
    const int dim = def.dim();
    const fs::path dir(c.out_dir);
    std::unique_ptr<SemiDiscreteSystem> sys;
    try {
        sys = std::make_unique<SemiDiscreteSystem>(def, c.elements(dim), c.degree, resolved_options(c));
    } catch (const DomainError& e) {
        fmt::print(log, "error: {}\n", e.what());
        return exit_config_error;
    }
    fs::create_directories(dir);
    write_file(dir / "config.ini", serialize_config(c));

    std::ofstream diag(dir / "diagnostics.csv", std::ios::binary);
    if (!diag) throw Error("cannot write " + (dir / "diagnostics.csv").string());
    diag << "step,t,field,min,max,numax,walltime_ms\n" << std::flush;

    const int res = default_dump_resolution(c, dim);
    RunControl ctl;
    ctl.t_final = c.t_final;
    ctl.dt = c.dt;
    ctl.diag_every = c.diag_every;
    ctl.on_diagnostic = [&](const Diagnostic& d) {
        diag << fmt::format("{},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.3f}\n", d.step, d.t, d.field, d.min, d.max,
                            d.numax, d.walltime_ms)
             << std::flush;
    };
    if (c.dump_every > 0) {
        ctl.on_step = [&](const SimState& s) {
            if (s.step % c.dump_every != 0) return;
            const auto visc = sys->viscosity(s.fields, s.history);
            dump_fields(*sys, s.fields, visc, res, (dir / fmt::format("fields_step{:06d}.csv", s.step)).string());
        };
    }

    SimState final_state;
    try {
        final_state = run(*sys, ctl);
    } catch (const BlowUp& e) {
        fmt::print(log, "blow-up: {}\n", e.what());
        return exit_blow_up;
    } catch (const InadmissibleState& e) {
        fmt::print(log, "blow-up: {}\n", e.what());
        return exit_blow_up;
    }

    const auto visc = sys->viscosity(final_state.fields, final_state.history);
    dump_fields(*sys, final_state.fields, visc, res, (dir / "fields_final.csv").string());
    fmt::print(log, "{}: {} steps to t = {:.6g}, max nu_art = {:.3e}\n", def.name, final_state.step, final_state.t,
               visc.max_nu());

    if (const auto exact = exact_for_case(def)) {
        if (final_state.t > exact->t_max) {
            fmt::print(log, "exact solution not valid at t = {:.6g}; errors.csv skipped\n", final_state.t);
        } else {
            try {
                std::string out = "component,norm,error\n";
                const auto names = def.law.component_names();
                for (Norm norm : {Norm::L1, Norm::L2}) {
                    const auto err = error_norms(sys->space(), final_state.fields, *exact, final_state.t, norm);
                    for (std::size_t e = 0; e < err.size(); ++e) {
                        out += fmt::format("{},{},{:.17g}\n", names[e], to_string(norm), err[e]);
                        fmt::print(log, "  {} error {}: {:.6e}\n", to_string(norm), names[e], err[e]);
                    }
                }
                write_file(dir / "errors.csv", out);
            } catch (const DomainError& e) {
                fmt::print(log, "exact solution unavailable ({}); errors.csv skipped\n", e.what());
            }
        }
    }
    return exit_ok;
}

int run_convergence(const RunConfig& c, std::ostream& log)
{
    if (c.meshes.size() < 2 || c.degrees.empty()) {
        fmt::print(log, "error: convergence mode needs 'meshes' (two or more) and a degree\n");
        return exit_config_error;
    }
    const auto def = resolved_case(c);
    const int dim = def.dim();
    StudySpec spec;
    spec.def = def;
    spec.degrees = c.degrees;
    spec.meshes = c.meshes;
    spec.solver = resolved_options(c);
    spec.dt = c.dt;
    spec.t_final = c.t_final;

    const fs::path dir(c.out_dir);
    fs::create_directories(dir);
    if (auto exact = exact_for_case(def); exact && c.t_final <= exact->t_max) {
        spec.exact = *exact;
    } else {
        const int finest = *std::max_element(c.meshes.begin(), c.meshes.end());
        int cells = c.reference_cells;
        if (cells <= 0) cells = dim == 1 ? std::max(4000, 16 * finest) : 8 * finest;
        std::array<int, 3> n{1, 1, 1};
        for (int d = 0; d < dim; ++d) n[d] = cells;
        fmt::print(log, "reference: finite volumes on {} cells per direction\n", cells);
        spec.exact = cached_fv_solution(def, n, c.t_final, (dir / "reference").string()).as_exact();
    }

    const auto table = convergence_study(spec);
    write_file(dir / "convergence.csv", table.to_csv());
    write_file(dir / "config.ini", serialize_config(c));
    bool failed = false;
    for (const auto& row : table.rows) {
        if (!row.failure.empty()) {
            failed = true;
            fmt::print(log, "k={} n={}: {}\n", row.k, row.n_elements, row.failure);
        } else {
            fmt::print(log, "k={} n={:4d} {:8s} error {:.6e} rate {:.3f}\n", row.k, row.n_elements, row.norm, row.error,
                       row.rate);
        }
    }
    return failed ? exit_blow_up : exit_ok;
}

}  // namespace igc
