#include "igc/integrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace igc {

std::string to_string(BdfStartup s) { return s == BdfStartup::ramp ? "ramp" : "wait"; }

BdfStartup parse_bdf_startup(const std::string& s)
{
    if (s == "ramp") return BdfStartup::ramp;
    if (s == "wait") return BdfStartup::wait;
    throw DomainError("unknown bdf_startup '" + s + "' (expected ramp or wait)");
}

SolverOptions SolverOptions::from_case(const CaseDefinition& c)
{
    SolverOptions o;
    o.constants = c.constants;
    o.regularization = c.regularization;
    o.init = c.init_policy;
    return o;
}

void gp_viscous_terms(int dim, const double* q, const double* dq, const double* d2q, double mu, double kappa,
                      double* out)
{
    const double rho = q[0];
    const int ie = dim + 1;
    auto D = [&](int e, int j) { return dq[e * 3 + j]; };
    auto D2 = [&](int e, int j, int k) { return d2q[e * 9 + j * 3 + k]; };

    double u[3] = {0, 0, 0};
    double du[3][3] = {};  // du[i][j] = d_j u_i
    double d2u[3][3][3] = {};
    for (int i = 0; i < dim; ++i) u[i] = q[1 + i] / rho;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) du[i][j] = (D(1 + i, j) - u[i] * D(0, j)) / rho;
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            for (int k = 0; k < dim; ++k) {
                d2u[i][j][k] =
                    (D2(1 + i, j, k) - du[i][k] * D(0, j) - du[i][j] * D(0, k) - u[i] * D2(0, j, k)) / rho;
            }
        }
    }
    double lap_rho = 0.0;
    double lap_E = 0.0;
    double u2 = 0.0;
    for (int j = 0; j < dim; ++j) {
        lap_rho += D2(0, j, j);
        lap_E += D2(ie, j, j);
        u2 += u[j] * u[j];
    }
    double S[3][3] = {};
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) S[i][j] = 0.5 * (du[i][j] + du[j][i]);
    }
    // divS[i] = sum_j d_j S_ij
    double divS[3] = {0, 0, 0};
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) divS[i] += 0.5 * (d2u[i][j][j] + d2u[j][i][j]);
    }

    out[0] = kappa * lap_rho;
    double energy_mu = 0.0;
    double energy_kappa = kappa * lap_E + 0.5 * u2 * kappa * lap_rho;
    for (int i = 0; i < dim; ++i) {
        double visc = rho * divS[i];
        double mass = u[i] * lap_rho;
        for (int j = 0; j < dim; ++j) {
            visc += D(0, j) * S[i][j];
            mass += du[i][j] * D(0, j);
            energy_mu += rho * S[i][j] * du[i][j];
            energy_kappa += kappa * u[i] * du[i][j] * D(0, j);
        }
        out[1 + i] = mu * visc + kappa * mass;
        energy_mu += visc * u[i];
    }
    out[ie] = energy_kappa + mu * energy_mu;
}

SemiDiscreteSystem::SemiDiscreteSystem(const CaseDefinition& def, std::array<int, 3> n_elements, int degree,
                                       SolverOptions opt)
    : def_(def), opt_(opt), space_([&] {
          std::vector<SplineSpace1D> s;
          for (int d = 0; d < def.dim(); ++d) {
              s.push_back(SplineSpace1D::make(def.lower[d], def.upper[d], n_elements[d], degree,
                                              def.periodic(d) ? Topology::periodic : Topology::open));
          }
          return TensorSpace(std::move(s));
      }())
{
    const int dim = def_.dim();
    if ((opt_.nonlinear || opt_.linear) && degree < 2) {
        throw DomainError("stabilized runs need degree >= 2 (got " + std::to_string(degree) + ")");
    }
    mass_ = TensorMassSolver(space_);
    pts_ = GridOperators::at_greville(space_, 2);
    std::array<std::vector<double>, 3> cpts;
    for (int d = 0; d < dim; ++d) cpts[d] = space_.centroids(d);
    centroids_ = GridOperators(space_, cpts, 1);
    if (opt_.linear) {
        coarse_ = CoarseStabOperator(space_);
        has_coarse_ = true;
    }
    h_ = space_.mesh_size();

    const Shape s = space_.shape();
    for (int d = 0; d < dim; ++d) {
        if (def_.periodic(d)) continue;
        for (int side = 0; side < 2; ++side) {
            if (def_.bc[d][side] != BoundaryKind::dirichlet) continue;
            if (!def_.boundary) throw DomainError("case '" + def_.name + "' has a Dirichlet side but no boundary data");
            Face f;
            f.dir = d;
            f.side = side;
            const int fixed = side == 0 ? 0 : s.n[d] - 1;
            for (std::size_t p = 0; p < s.size(); ++p) {
                std::size_t rem = p;
                int idx[3] = {0, 0, 0};
                for (int a = 0; a < 3; ++a) {
                    idx[a] = int(rem % std::size_t(s.n[a]));
                    rem /= std::size_t(s.n[a]);
                }
                if (idx[d] != fixed) continue;
                f.points.push_back(p);
                f.x.push_back(space_.point(p));
            }
            if (dim > 1) {
                std::vector<SplineSpace1D> others;
                for (int a = 0; a < dim; ++a) {
                    if (a != d) others.push_back(space_.space(a));
                }
                f.fit = TensorMassSolver(TensorSpace(std::move(others)));
            }
            faces_.push_back(std::move(f));
        }
    }
}

GridTopology SemiDiscreteSystem::topology() const
{
    GridTopology g;
    g.shape = space_.shape();
    for (int d = 0; d < space_.dim(); ++d) g.periodic[d] = def_.periodic(d);
    return g;
}

std::vector<double> SemiDiscreteSystem::point_values(const FieldCoeffs& c) const
{
    std::vector<double> out;
    pts_.eval(c.values, {0, 0, 0}, out, scratch_);
    return out;
}

std::string SemiDiscreteSystem::describe_point(std::size_t p, double t) const
{
    const auto x = space_.point(p);
    std::ostringstream os;
    os.precision(17);
    os << "x=(";
    for (int d = 0; d < space_.dim(); ++d) os << (d ? "," : "") << x[d];
    os << ") t=" << t;
    return os.str();
}

std::vector<double> SemiDiscreteSystem::wavespeed(const std::vector<std::vector<double>>& u, double t) const
{
    const int m = components();
    const std::size_t n = space_.size();
    std::vector<double> c(n);
    double q[5];
    for (std::size_t p = 0; p < n; ++p) {
        for (int e = 0; e < m; ++e) q[e] = u[e][p];
        if (def_.law.is_euler()) check_admissible(q, def_.dim(), def_.law.gamma, describe_point(p, t));
        c[p] = def_.law.wavespeed(q);
    }
    return c;
}

void SemiDiscreteSystem::flux_fits(const std::vector<std::vector<double>>& u,
                                   std::vector<std::vector<FieldCoeffs>>& fits) const
{
    const int m = components();
    const int dim = space_.dim();
    const std::size_t n = space_.size();
    fits.assign(dim, std::vector<FieldCoeffs>(m, FieldCoeffs(space_.shape())));
    double q[5];
    double f[5];
    for (std::size_t p = 0; p < n; ++p) {
        for (int e = 0; e < m; ++e) q[e] = u[e][p];
        for (int d = 0; d < dim; ++d) {
            def_.law.flux(q, d, f);
            for (int e = 0; e < m; ++e) fits[d][e].values[p] = f[e];
        }
    }
    for (int d = 0; d < dim; ++d) {
        for (int e = 0; e < m; ++e) mass_.solve_in_place(fits[d][e].values);
    }
}

void SemiDiscreteSystem::face_values(const Face& f, const BoundaryFn& g, double t,
                                     std::vector<std::vector<double>>& out) const
{
    const int m = components();
    out.assign(m, std::vector<double>(f.points.size()));
    double q[5];
    for (std::size_t k = 0; k < f.points.size(); ++k) {
        g(f.x[k].data(), t, q);
        for (int e = 0; e < m; ++e) out[e][k] = q[e];
    }
}

void SemiDiscreteSystem::apply_bcs(State& c, double t) const
{
    std::vector<std::vector<double>> vals;
    for (const auto& f : faces_) {
        face_values(f, def_.boundary, t, vals);
        for (int e = 0; e < components(); ++e) {
            if (space_.dim() > 1) f.fit.solve_in_place(vals[e]);
            for (std::size_t k = 0; k < f.points.size(); ++k) c[e].values[f.points[k]] = vals[e][k];
        }
    }
}

State SemiDiscreteSystem::initial_state() const
{
    const int m = components();
    const std::size_t n = space_.size();
    State s(m, FieldCoeffs(space_.shape()));
    double q[5];
    for (std::size_t p = 0; p < n; ++p) {
        const auto x = space_.point(p);
        def_.initial(x.data(), q);
        for (int e = 0; e < m; ++e) s[e].values[p] = q[e];
    }
    if (opt_.init == InitPolicy::interpolate) {
        for (auto& f : s) mass_.solve_in_place(f.values);
    }
    apply_bcs(s, 0.0);
    return s;
}

void SemiDiscreteSystem::rhs(const State& c, const ViscosityState& visc, double t, State& rates) const
{
    const int m = components();
    const int dim = space_.dim();
    const std::size_t n = space_.size();
    const bool euler = def_.law.is_euler();

    std::vector<std::vector<double>> u(m);
    for (int e = 0; e < m; ++e) pts_.eval(c[e].values, {0, 0, 0}, u[e], scratch_);
    if (euler) {
        double q[5];
        for (std::size_t p = 0; p < n; ++p) {
            for (int e = 0; e < m; ++e) q[e] = u[e][p];
            check_admissible(q, dim, def_.law.gamma, describe_point(p, t));
        }
    }

    std::vector<std::vector<FieldCoeffs>> fits;
    flux_fits(u, fits);

    rates.assign(m, FieldCoeffs(space_.shape()));
    for (int e = 0; e < m; ++e) {
        auto& r = rates[e].values;
        for (int d = 0; d < dim; ++d) {
            std::array<int, 3> o{0, 0, 0};
            o[d] = 1;
            pts_.eval(fits[d][e].values, o, tmp_, scratch_);
            for (std::size_t p = 0; p < n; ++p) r[p] -= tmp_[p];
        }
    }

    bool viscous = false;
    for (double v : visc.nu_art) {
        if (v > 0.0) {
            viscous = true;
            break;
        }
    }
    if (viscous) {
        if (!euler || opt_.regularization == Regularization::laplacian) {
            for (int e = 0; e < m; ++e) {
                auto& r = rates[e].values;
                for (int d = 0; d < dim; ++d) {
                    std::array<int, 3> o{0, 0, 0};
                    o[d] = 2;
                    pts_.eval(c[e].values, o, tmp_, scratch_);
                    for (std::size_t p = 0; p < n; ++p) r[p] += visc.nu_art[p] * tmp_[p];
                }
            }
        } else {
            // dq[e][j], d2q[e][j][k] at every point
            std::vector<std::vector<double>> d1(m * 3);
            std::vector<std::vector<double>> d2(m * 9);
            for (int e = 0; e < m; ++e) {
                for (int j = 0; j < dim; ++j) {
                    std::array<int, 3> o{0, 0, 0};
                    o[j] = 1;
                    pts_.eval(c[e].values, o, d1[e * 3 + j], scratch_);
                    for (int k = j; k < dim; ++k) {
                        std::array<int, 3> o2{0, 0, 0};
                        o2[j] += 1;
                        o2[k] += 1;
                        pts_.eval(c[e].values, o2, d2[e * 9 + j * 3 + k], scratch_);
                    }
                }
            }
            double q[5];
            double dq[15];
            double d2q[45];
            double out[5];
            for (std::size_t p = 0; p < n; ++p) {
                if (visc.nu_art[p] == 0.0 && visc.kappa[p] == 0.0) continue;
                for (int e = 0; e < m; ++e) {
                    q[e] = u[e][p];
                    for (int j = 0; j < dim; ++j) {
                        dq[e * 3 + j] = d1[e * 3 + j][p];
                        for (int k = j; k < dim; ++k) {
                            d2q[e * 9 + j * 3 + k] = d2[e * 9 + j * 3 + k][p];
                            d2q[e * 9 + k * 3 + j] = d2q[e * 9 + j * 3 + k];
                        }
                    }
                }
                gp_viscous_terms(dim, q, dq, d2q, visc.nu_art[p], visc.kappa[p], out);
                for (int e = 0; e < m; ++e) rates[e].values[p] += out[e];
            }
        }
    }

    if (has_coarse_ && opt_.linear) {
        for (int e = 0; e < m; ++e) {
            coarse_.apply(c[e].values, tmp_);
            auto& r = rates[e].values;
            for (std::size_t p = 0; p < n; ++p) r[p] += visc.nu_lin[p] * tmp_[p];
        }
    }

    std::vector<std::vector<double>> gt;
    for (const auto& f : faces_) {
        if (def_.boundary_rate) {
            face_values(f, def_.boundary_rate, t, gt);
        } else {
            gt.assign(m, std::vector<double>(f.points.size(), 0.0));
        }
        for (int e = 0; e < m; ++e) {
            for (std::size_t k = 0; k < f.points.size(); ++k) rates[e].values[f.points[k]] = gt[e][k];
        }
    }

    for (int e = 0; e < m; ++e) mass_.solve_in_place(rates[e].values);
}

std::vector<std::vector<double>> SemiDiscreteSystem::residual(const State& c, const HistoryBuffer& history) const
{
    if (history.size() == 0 || history.order() == 0) return {};
    const int m = components();
    const int dim = space_.dim();
    std::vector<std::vector<double>> u(m);
    for (int e = 0; e < m; ++e) pts_.eval(c[e].values, {0, 0, 0}, u[e], scratch_);
    std::vector<std::vector<FieldCoeffs>> fits;
    flux_fits(u, fits);
    std::vector<std::vector<double>> res(m);
    for (int e = 0; e < m; ++e) {
        const auto dtc = history.time_derivative(e);
        centroids_.eval(dtc.values, {0, 0, 0}, res[e], scratch_);
        for (int d = 0; d < dim; ++d) {
            std::array<int, 3> o{0, 0, 0};
            o[d] = 1;
            centroids_.eval(fits[d][e].values, o, tmp_, scratch_);
            for (std::size_t p = 0; p < res[e].size(); ++p) res[e][p] += tmp_[p];
        }
    }
    return res;
}

ViscosityState SemiDiscreteSystem::viscosity(const State& c, const HistoryBuffer& history) const
{
    const int m = components();
    std::vector<std::vector<double>> u(m);
    for (int e = 0; e < m; ++e) pts_.eval(c[e].values, {0, 0, 0}, u[e], scratch_);
    const double t = history.size() ? history.time(0) : 0.0;
    const auto ws = wavespeed(u, t);
    std::vector<std::vector<double>> res;
    const bool warm = opt_.startup == BdfStartup::ramp || history.order() >= 4;
    if (opt_.nonlinear && warm) res = residual(c, history);

    ViscosityInputs in;
    in.grid = topology();
    in.centroid_shape = space_.centroid_shape();
    in.h = h_;
    in.wavespeed = ws;
    for (auto& r : res) in.residual.emplace_back(r);
    if (!res.empty()) {
        for (auto& v : u) in.values.emplace_back(v);
    }
    ViscosityOptions vo;
    vo.nonlinear = opt_.nonlinear;
    vo.linear = opt_.linear;
    vo.normalization = opt_.normalization;
    if (def_.law.is_euler()) {
        vo.mode = opt_.regularization == Regularization::laplacian ? ViscosityMode::euler_laplacian
                                                                   : ViscosityMode::euler_gp;
    }
    auto st = compute_viscosity(in, opt_.constants, vo);
    if (vo.mode == ViscosityMode::euler_gp && st.kappa.empty()) st.kappa.assign(st.nu_art.size(), 0.0);
    return st;
}

SimState initial_sim_state(const SemiDiscreteSystem& sys)
{
    SimState s;
    s.fields = sys.initial_state();
    s.t = 0.0;
    s.step = 0;
    s.history.push(0.0, s.fields);
    return s;
}

namespace {

void axpy(State& out, const State& base, double a, const State& k)
{
    for (std::size_t e = 0; e < base.size(); ++e) {
        auto& o = out[e].values;
        const auto& b = base[e].values;
        const auto& r = k[e].values;
        for (std::size_t i = 0; i < b.size(); ++i) o[i] = b[i] + a * r[i];
    }
}

}  // namespace

void rk4_step(const SemiDiscreteSystem& sys, SimState& s, double dt)
{
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    s.viscosity = sys.viscosity(s.fields, s.history);
    const auto& v = s.viscosity;
    const double t = s.t;
    State k1;
    State k2;
    State k3;
    State k4;
    State stage = s.fields;
    sys.rhs(s.fields, v, t, k1);
    axpy(stage, s.fields, 0.5 * dt, k1);
    sys.apply_bcs(stage, t + 0.5 * dt);
    sys.rhs(stage, v, t + 0.5 * dt, k2);
    axpy(stage, s.fields, 0.5 * dt, k2);
    sys.apply_bcs(stage, t + 0.5 * dt);
    sys.rhs(stage, v, t + 0.5 * dt, k3);
    axpy(stage, s.fields, dt, k3);
    sys.apply_bcs(stage, t + dt);
    sys.rhs(stage, v, t + dt, k4);
    for (std::size_t e = 0; e < s.fields.size(); ++e) {
        auto& c = s.fields[e].values;
        for (std::size_t i = 0; i < c.size(); ++i) {
            c[i] += dt / 6.0 * (k1[e].values[i] + 2.0 * k2[e].values[i] + 2.0 * k3[e].values[i] + k4[e].values[i]);
            if (!std::isfinite(c[i])) {
                std::ostringstream os;
                os.precision(17);
                os << "non-finite coefficient in component " << e << " at step " << s.step + 1 << " (t=" << t + dt
                   << ")";
                throw BlowUp(os.str());
            }
        }
    }
    sys.apply_bcs(s.fields, t + dt);
    s.t = t + dt;
    s.step += 1;
    s.history.push(s.t, s.fields);
}

namespace {

void emit(const SemiDiscreteSystem& sys, const SimState& s, const RunControl& ctl, double ms)
{
    if (!ctl.on_diagnostic) return;
    const auto names = sys.definition().law.component_names();
    for (std::size_t e = 0; e < s.fields.size(); ++e) {
        const auto u = sys.point_values(s.fields[e]);
        const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
        ctl.on_diagnostic(Diagnostic{s.step, s.t, names[e], *lo, *hi, s.viscosity.max_nu(), ms});
    }
}

}  // namespace

void advance(const SemiDiscreteSystem& sys, SimState& s, const RunControl& ctl)
{
    if (!(ctl.dt > 0.0)) throw DomainError("time step must be positive");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    };
    const double t0 = s.t;
    long taken = 0;
    const double snap = 1e-9 * ctl.dt;
    while (ctl.t_final - s.t > snap) {
        double t_next = std::min(ctl.t_final, t0 + double(taken + 1) * ctl.dt);
        if (ctl.t_final - t_next < snap) t_next = ctl.t_final;
        rk4_step(sys, s, t_next - s.t);
        s.t = t_next;
        ++taken;
        if (ctl.on_step) ctl.on_step(s);
        const bool last = ctl.t_final - s.t <= snap;
        if (last || (ctl.diag_every > 0 && s.step % ctl.diag_every == 0)) emit(sys, s, ctl, elapsed());
    }
    if (taken == 0) emit(sys, s, ctl, elapsed());
}

SimState run(const SemiDiscreteSystem& sys, const RunControl& ctl)
{
    auto s = initial_sim_state(sys);
    advance(sys, s, ctl);
    return s;
}

}  // namespace igc
