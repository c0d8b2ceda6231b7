#include "igc/laws.hpp"

#include <cmath>
#include <sstream>

namespace igc {

std::string to_string(LawKind k)
{
    switch (k) {
    case LawKind::advection: return "advection";
    case LawKind::burgers: return "burgers";
    case LawKind::buckley_leverett: return "buckley_leverett";
    case LawKind::bl_gravity: return "bl_gravity";
    case LawKind::euler: return "euler";
    }
    return "?";
}

std::string to_string(Regularization r)
{
    return r == Regularization::laplacian ? "laplacian" : "guermond_popov";
}

Regularization parse_regularization(const std::string& s)
{
    if (s == "laplacian") return Regularization::laplacian;
    if (s == "guermond_popov" || s == "gp") return Regularization::guermond_popov;
    throw DomainError("unknown regularization '" + s + "' (expected laplacian or guermond_popov)");
}

std::string to_string(BoundaryKind b)
{
    switch (b) {
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::outflow: return "outflow";
    }
    return "?";
}

std::string to_string(InitPolicy p)
{
    return p == InitPolicy::inject ? "inject" : "interpolate";
}

InitPolicy parse_init_policy(const std::string& s)
{
    if (s == "inject") return InitPolicy::inject;
    if (s == "interpolate") return InitPolicy::interpolate;
    throw DomainError("unknown initial-condition policy '" + s + "' (expected inject or interpolate)");
}

Law Law::advection(int dim, std::array<double, 3> a)
{
    Law l;
    l.kind = LawKind::advection;
    l.dim = dim;
    l.velocity = a;
    return l;
}

Law Law::burgers(int dim, std::array<double, 3> v)
{
    Law l;
    l.kind = LawKind::burgers;
    l.dim = dim;
    l.velocity = v;
    return l;
}

Law Law::buckley_leverett()
{
    Law l;
    l.kind = LawKind::buckley_leverett;
    l.dim = 1;
    return l;
}

Law Law::bl_gravity()
{
    Law l;
    l.kind = LawKind::bl_gravity;
    l.dim = 2;
    return l;
}

Law Law::euler(int dim, double gamma)
{
    Law l;
    l.kind = LawKind::euler;
    l.dim = dim;
    l.gamma = gamma;
    return l;
}

std::string Law::name() const
{
    return to_string(kind) + "_" + std::to_string(dim) + "d";
}

std::vector<std::string> Law::component_names() const
{
    if (!is_euler()) return {"phi"};
    std::vector<std::string> names{"rho"};
    const char* axes = "xyz";
    for (int d = 0; d < dim; ++d) names.push_back(std::string("m") + axes[d]);
    names.push_back("E");
    return names;
}

namespace {

double bl_denominator(double p)
{
    return p * p + (1.0 - p) * (1.0 - p);
}

}  // namespace

void Law::flux(const double* q, int dir, double* out) const
{
    switch (kind) {
    case LawKind::advection:
        out[0] = velocity[dir] * q[0];
        return;
    case LawKind::burgers:
        out[0] = 0.5 * q[0] * q[0] * velocity[dir];
        return;
    case LawKind::buckley_leverett:
    case LawKind::bl_gravity: {
        const double p = q[0];
        const double D = bl_denominator(p);
        if (dir == 0) {
            out[0] = p * p / D;
        } else {
            const double w = 1.0 - p;
            out[0] = p * p * (1.0 - 5.0 * w * w) / D;
        }
        return;
    }
    case LawKind::euler: {
        const double rho = q[0];
        const double p = euler_pressure(q, dim, gamma);
        const double un = q[1 + dir] / rho;
        out[0] = q[1 + dir];
        for (int i = 0; i < dim; ++i) out[1 + i] = q[1 + i] * un;
        out[1 + dir] += p;
        out[dim + 1] = (q[dim + 1] + p) * un;
        return;
    }
    }
}

void Law::flux_derivative(double phi, double* out) const
{
    switch (kind) {
    case LawKind::advection:
        for (int d = 0; d < dim; ++d) out[d] = velocity[d];
        return;
    case LawKind::burgers:
        for (int d = 0; d < dim; ++d) out[d] = phi * velocity[d];
        return;
    case LawKind::buckley_leverett:
    case LawKind::bl_gravity: {
        const double p = phi;
        const double D = bl_denominator(p);
        const double dD = 4.0 * p - 2.0;
        out[0] = (2.0 * p * D - p * p * dD) / (D * D);
        if (dim > 1) {
            const double w = 1.0 - p;
            const double g = p * p * (1.0 - 5.0 * w * w);
            const double dg = 2.0 * p * (1.0 - 5.0 * w * w) + 10.0 * p * p * w;
            out[1] = (dg * D - g * dD) / (D * D);
        }
        return;
    }
    case LawKind::euler:
        throw Error("flux_derivative is defined for scalar laws only");
    }
}

double Law::wavespeed(const double* q) const
{
    if (is_euler()) {
        const double rho = q[0];
        const double T = euler_temperature(q, dim, gamma);
        if (!(rho > 0.0) || !(T > 0.0)) throw InadmissibleState("inadmissible Euler state");
        double u2 = 0.0;
        for (int d = 0; d < dim; ++d) u2 += (q[1 + d] / rho) * (q[1 + d] / rho);
        return std::sqrt(u2) + std::sqrt(gamma * T);
    }
    std::array<double, 3> fp{};
    flux_derivative(q[0], fp.data());
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += fp[d] * fp[d];
    return std::sqrt(s);
}

double euler_pressure(const double* q, int dim, double gamma)
{
    double m2 = 0.0;
    for (int d = 0; d < dim; ++d) m2 += q[1 + d] * q[1 + d];
    return (gamma - 1.0) * (q[dim + 1] - 0.5 * m2 / q[0]);
}

double euler_temperature(const double* q, int dim, double gamma)
{
    if (!(q[0] > 0.0)) throw InadmissibleState("temperature requested for non-positive density");
    return euler_pressure(q, dim, gamma) / q[0];
}

void euler_conserved(double rho, const double* u, double p, int dim, double gamma, double* q)
{
    double u2 = 0.0;
    q[0] = rho;
    for (int d = 0; d < dim; ++d) {
        q[1 + d] = rho * u[d];
        u2 += u[d] * u[d];
    }
    q[dim + 1] = p / (gamma - 1.0) + 0.5 * rho * u2;
}

void check_admissible(const double* q, int dim, double gamma, const std::string& where)
{
    const double rho = q[0];
    const double p = rho > 0.0 ? euler_pressure(q, dim, gamma) : 0.0;
    if (rho > 0.0 && p > 0.0 && std::isfinite(p)) return;
    std::ostringstream msg;
    msg.precision(17);
    msg << "inadmissible Euler state at " << where << ": rho=" << rho;
    for (int d = 0; d < dim; ++d) msg << " m" << d << "=" << q[1 + d];
    msg << " E=" << q[dim + 1] << " p=" << p;
    throw InadmissibleState(msg.str());
}

StabConstants euler_constants(Regularization r, int dim)
{
    StabConstants c;
    c.c_rb = 4.0;
    c.c_lin = 0.25;
    if (r == Regularization::laplacian) {
        c.c_max = 0.1;
        c.prandtl = 0.0;
    } else if (dim == 1) {
        c.c_max = 0.2;
        c.prandtl = 0.5;
    } else {
        c.c_max = 0.1;
        c.prandtl = 1.0;
    }
    return c;
}

double burgers_characteristic(const std::function<double(double)>& phi0,
                              const std::function<double(double)>& dphi0, double x, double t)
{
    double phi = phi0(x);
    if (t == 0.0) return phi;
    for (int it = 0; it < 100; ++it) {
        const double xi = x - phi * t;
        const double slope = dphi0(xi);
        if (1.0 + t * slope <= 0.0) throw DomainError("Burgers characteristics have crossed");
        const double res = phi - phi0(xi);
        const double step = res / (1.0 + t * slope);
        phi -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(phi))) break;
    }
    return phi;
}

namespace {

const double pi = std::acos(-1.0);

CaseDefinition scalar_base(std::string name, Law law)
{
    CaseDefinition c;
    c.name = std::move(name);
    c.law = law;
    return c;
}

void set_all(CaseDefinition& c, BoundaryKind b)
{
    for (auto& side : c.bc) side = {b, b};
}

// Reflects [0,2] onto [0,1] about 1; returns true if reflected.
bool fold(double& x)
{
    if (x > 1.0) {
        x = 2.0 - x;
        return true;
    }
    return false;
}

BoundaryFn constant_boundary(const CaseDefinition& c)
{
    StateFn ic = c.initial;
    return [ic](const double* x, double, double* q) { ic(x, q); };
}

CaseDefinition make_adv_smooth()
{
    auto c = scalar_base("adv_smooth", Law::advection(2, {1.0, 1.0, 0.0}));
    set_all(c, BoundaryKind::periodic);
    c.initial = [](const double* x, double* q) { q[0] = std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]); };
    c.t_final = 1.0;
    c.dt = 1e-4;
    c.constants = {4.0, 0.5, 0.25, 0.0};
    c.init_policy = InitPolicy::interpolate;
    c.smooth = true;
    return c;
}

CaseDefinition make_adv_square()
{
    auto c = scalar_base("adv_square", Law::advection(2, {1.0, 1.0, 0.0}));
    set_all(c, BoundaryKind::periodic);
    c.initial = [](const double* x, double* q) {
        const bool inside = x[0] > 0.3 && x[0] < 0.7 && x[1] > 0.3 && x[1] < 0.7;
        q[0] = inside ? 1.0 : 0.0;
    };
    c.t_final = 1.0;
    c.dt = 1e-4;
    c.constants = {4.0, 0.5, 0.25, 0.0};
    return c;
}

CaseDefinition make_burgers_smooth()
{
    auto c = scalar_base("burgers_smooth", Law::burgers(1, {1.0, 0.0, 0.0}));
    c.bc[0] = {BoundaryKind::dirichlet, BoundaryKind::outflow};
    auto phi0 = [](double x) { return std::exp(x) - 1.0; };
    auto dphi0 = [](double x) { return std::exp(x); };
    c.initial = [phi0](const double* x, double* q) { q[0] = phi0(x[0]); };
    c.boundary = [phi0, dphi0](const double* x, double t, double* q) {
        q[0] = burgers_characteristic(phi0, dphi0, x[0], t);
    };
    c.boundary_rate = [phi0, dphi0](const double* x, double t, double* q) {
        const double phi = burgers_characteristic(phi0, dphi0, x[0], t);
        const double s = dphi0(x[0] - phi * t);
        q[0] = -phi * s / (1.0 + t * s);
    };
    c.t_final = 0.01;
    c.dt = 5e-5;
    c.constants = {4.0, 0.5, 0.25, 0.0};
    c.init_policy = InitPolicy::interpolate;
    c.smooth = true;
    return c;
}

CaseDefinition make_burgers_riemann_1d()
{
    auto c = scalar_base("burgers_riemann_1d", Law::burgers(1, {1.0, 0.0, 0.0}));
    c.bc[0] = {BoundaryKind::dirichlet, BoundaryKind::outflow};
    c.initial = [](const double* x, double* q) { q[0] = x[0] < 1.0 / 3.0 ? 1.0 : 0.0; };
    c.boundary = constant_boundary(c);
    c.t_final = 0.2;
    c.dt = 1e-5;
    c.constants = {4.0, 0.5, 0.25, 0.0};
    return c;
}

CaseDefinition make_burgers_riemann_2d()
{
    auto c = scalar_base("burgers_riemann_2d", Law::burgers(2, {1.0, 1.0, 0.0}));
    c.upper = {2.0, 2.0, 1.0};
    set_all(c, BoundaryKind::periodic);
    c.initial = [](const double* x, double* q) {
        double a = x[0];
        double b = x[1];
        fold(a);
        fold(b);
        if (a < 0.5) {
            q[0] = b < 0.5 ? 0.5 : -0.2;
        } else {
            q[0] = b < 0.5 ? 0.8 : -1.0;
        }
    };
    c.t_final = 0.5;
    c.dt = 2e-4;
    c.constants = {4.0, 0.5, 0.25, 0.0};
    return c;
}

CaseDefinition make_bl_riemann_1d()
{
    auto c = scalar_base("bl_riemann_1d", Law::buckley_leverett());
    c.lower = {-1.0, 0.0, 0.0};
    c.upper = {1.0, 1.0, 1.0};
    c.bc[0] = {BoundaryKind::dirichlet, BoundaryKind::outflow};
    c.initial = [](const double* x, double* q) { q[0] = x[0] < 0.0 ? 1.0 : 0.0; };
    c.boundary = constant_boundary(c);
    c.t_final = 0.25;
    c.dt = 5e-5;
    c.constants = {4.0, 0.25, 0.25, 0.0};
    return c;
}

CaseDefinition make_bl_gravity_2d()
{
    auto c = scalar_base("bl_gravity_2d", Law::bl_gravity());
    c.lower = {-1.5, -1.5, 0.0};
    c.upper = {1.5, 1.5, 1.0};
    set_all(c, BoundaryKind::dirichlet);
    c.initial = [](const double* x, double* q) { q[0] = x[0] * x[0] + x[1] * x[1] < 0.5 ? 1.0 : 0.0; };
    c.boundary = [](const double*, double, double* q) { q[0] = 0.0; };
    c.t_final = 0.5;
    c.dt = 1e-4;
    c.constants = {4.0, 0.25, 0.25, 0.0};
    return c;
}

CaseDefinition euler_base(std::string name, int dim, double gamma)
{
    CaseDefinition c;
    c.name = std::move(name);
    c.law = Law::euler(dim, gamma);
    c.regularization = Regularization::guermond_popov;
    c.constants = euler_constants(c.regularization, dim);
    return c;
}

CaseDefinition make_euler_isentropic()
{
    auto c = euler_base("euler_isentropic", 1, 3.0);
    c.lower = {-1.0, 0.0, 0.0};
    c.upper = {1.0, 1.0, 1.0};
    set_all(c, BoundaryKind::periodic);
    c.initial = [](const double* x, double* q) {
        const double rho = 1.0 + 0.9 * std::sin(pi * x[0]);
        q[0] = rho;
        q[1] = 0.0;
        q[2] = std::pow(rho, 3.0) / 2.0;
    };
    c.t_final = 0.1;
    c.dt = 5e-5;
    c.init_policy = InitPolicy::interpolate;
    c.smooth = true;
    return c;
}

CaseDefinition make_euler_sod()
{
    auto c = euler_base("euler_sod", 1, 1.4);
    c.bc[0] = {BoundaryKind::dirichlet, BoundaryKind::dirichlet};
    c.initial = [](const double* x, double* q) {
        const double u = 0.0;
        if (x[0] < 0.5) {
            euler_conserved(1.0, &u, 1.0, 1, 1.4, q);
        } else {
            euler_conserved(0.125, &u, 0.1, 1, 1.4, q);
        }
    };
    c.boundary = constant_boundary(c);
    c.t_final = 0.25;
    c.dt = 1e-4;
    return c;
}

CaseDefinition make_euler_shu_osher()
{
    auto c = euler_base("euler_shu_osher", 1, 1.4);
    c.upper = {10.0, 1.0, 1.0};
    c.bc[0] = {BoundaryKind::dirichlet, BoundaryKind::dirichlet};
    c.initial = [](const double* x, double* q) {
        if (x[0] < 1.0) {
            const double u = 2.629;
            euler_conserved(3.857, &u, 10.333, 1, 1.4, q);
        } else {
            const double u = 0.0;
            euler_conserved(1.0 + 0.2 * std::sin(5.0 * x[0]), &u, 1.0, 1, 1.4, q);
        }
    };
    c.boundary = constant_boundary(c);
    c.t_final = 1.8;
    c.dt = 2e-5;
    return c;
}

CaseDefinition make_euler_case12()
{
    auto c = euler_base("euler_case12", 2, 1.4);
    c.upper = {2.0, 2.0, 1.0};
    set_all(c, BoundaryKind::periodic);
    c.initial = [](const double* x, double* q) {
        double a = x[0];
        double b = x[1];
        const bool fx = fold(a);
        const bool fy = fold(b);
        const double s = 3.0 / std::sqrt(17.0);
        double rho;
        double p;
        std::array<double, 2> u{0.0, 0.0};
        if (a < 0.5 && b < 0.5) {
            rho = 0.8;
            p = 1.0;
        } else if (a < 0.5) {
            rho = 1.0;
            p = 1.0;
            u[0] = s;
        } else if (b < 0.5) {
            rho = 1.0;
            p = 1.0;
            u[1] = s;
        } else {
            rho = 17.0 / 32.0;
            p = 0.4;
        }
        // mirror images carry reflected velocities
        if (fx) u[0] = -u[0];
        if (fy) u[1] = -u[1];
        euler_conserved(rho, u.data(), p, 2, 1.4, q);
    };
    c.t_final = 0.25;
    c.dt = 2e-4;
    return c;
}

}  // namespace

const std::vector<std::string>& builtin_case_names()
{
    static const std::vector<std::string> names{
        "adv_smooth",     "adv_square",       "burgers_smooth", "burgers_riemann_1d",
        "burgers_riemann_2d", "bl_riemann_1d", "bl_gravity_2d",  "euler_isentropic",
        "euler_sod",      "euler_shu_osher",  "euler_case12"};
    return names;
}

CaseDefinition builtin_case(const std::string& name)
{
    if (name == "adv_smooth") return make_adv_smooth();
    if (name == "adv_square") return make_adv_square();
    if (name == "burgers_smooth") return make_burgers_smooth();
    if (name == "burgers_riemann_1d") return make_burgers_riemann_1d();
    if (name == "burgers_riemann_2d") return make_burgers_riemann_2d();
    if (name == "bl_riemann_1d") return make_bl_riemann_1d();
    if (name == "bl_gravity_2d") return make_bl_gravity_2d();
    if (name == "euler_isentropic") return make_euler_isentropic();
    if (name == "euler_sod") return make_euler_sod();
    if (name == "euler_shu_osher") return make_euler_shu_osher();
    if (name == "euler_case12") return make_euler_case12();
    throw DomainError("unknown case '" + name + "'");
}

}  // namespace igc
