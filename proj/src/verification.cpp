#include "igc/verification.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

namespace igc {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

double scalar_flux(const Law& law, double u)
{
    double f;
    law.flux(&u, 0, &f);
    return f;
}

double scalar_speed(const Law& law, double u)
{
    double d[3];
    law.flux_derivative(u, d);
    return d[0];
}

// Samples of f on [lo, hi] for the Riemann fan.
struct ScalarFan {
    Law law;
    double left;
    double right;
    double x0;
    double lo;
    double hi;
    double sign;  // +1: maximize f - xi u (left > right), -1: minimize
    std::vector<double> u;
    std::vector<double> f;

    double objective(double v, double xi) const { return sign * (scalar_flux(law, v) - xi * v); }
    double slope(double v, double xi) const { return sign * (scalar_speed(law, v) - xi); }

    double state(double xi) const
    {
        if (left == right) return left;
        const int n = int(u.size());
        int best = 0;
        double bv = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            const double v = sign * (f[j] - xi * u[j]);
            if (v > bv) {
                bv = v;
                best = j;
            }
        }
        // refine an interior maximum: slope goes + to -
        int a = std::max(0, best - 1);
        int b = std::min(n - 1, best + 1);
        double ua = u[a];
        double ub = u[b];
        double sa = slope(ua, xi);
        double sb = slope(ub, xi);
        if (sa > 0.0 && sb < 0.0) {
            for (int it = 0; it < 200 && ub - ua > 1e-15 * (1.0 + std::abs(ua)); ++it) {
                const double mid = 0.5 * (ua + ub);
                if (slope(mid, xi) > 0.0) {
                    ua = mid;
                } else {
                    ub = mid;
                }
            }
            const double c = 0.5 * (ua + ub);
            if (objective(c, xi) >= bv) return c;
        }
        return u[best];
    }
};

}  // namespace

ExactSolution exact_scalar_riemann(const Law& law, double left, double right, double x0)
{
    if (law.is_euler() || law.dim != 1) throw DomainError("exact_scalar_riemann needs a 1D scalar law");
    auto fan = std::make_shared<ScalarFan>();
    fan->law = law;
    fan->left = left;
    fan->right = right;
    fan->x0 = x0;
    fan->lo = std::min(left, right);
    fan->hi = std::max(left, right);
    fan->sign = left > right ? 1.0 : -1.0;
    const int n = 4097;
    for (int j = 0; j < n; ++j) {
        // endpoints exact
        const double v = j == n - 1 ? fan->hi : fan->lo + (fan->hi - fan->lo) * j / double(n - 1);
        fan->u.push_back(v);
        fan->f.push_back(scalar_flux(law, v));
    }
    for (double v : fan->f) {
        if (!std::isfinite(v)) throw DomainError("exact_scalar_riemann: flux not finite between the states");
    }
    ExactSolution ex;
    ex.components = 1;
    ex.provenance = "scalar Riemann (" + law.name() + ")";
    ex.eval = [fan](const double* x, double t, double* q) {
        if (t <= 0.0) {
            q[0] = x[0] < fan->x0 ? fan->left : fan->right;
            return;
        }
        q[0] = fan->state((x[0] - fan->x0) / t);
    };
    return ex;
}

double bl_tangent_state(const Law& law)
{
    // g(u) = f'(u) u - f(u) = 0 on (0, 1); bracket the root, then Newton with
    // bisection fallback
    auto g = [&](double u) { return scalar_speed(law, u) * u - scalar_flux(law, u); };
    double a = 0.5;
    double b = 0.99;
    if (g(a) * g(b) > 0.0) throw DomainError("bl_tangent_state: no tangency in (0.5, 0.99)");
    double u = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        const double gu = g(u);
        if ((gu > 0.0) == (g(a) > 0.0)) {
            a = u;
        } else {
            b = u;
        }
        const double h = 1e-7;
        const double dg = (g(u + h) - g(u - h)) / (2 * h);
        double next = u - gu / dg;
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - u) < 1e-15) {
            u = next;
            break;
        }
        u = next;
    }
    return u;
}

// ---- Euler Riemann ----------------------------------------------------------

namespace {

struct PressureFn {
    double f;
    double df;
};

PressureFn pressure_fn(double p, const Primitive& s, double c, double gamma)
{
    if (p > s.p) {
        const double A = 2.0 / ((gamma + 1.0) * s.rho);
        const double B = (gamma - 1.0) / (gamma + 1.0) * s.p;
        const double q = std::sqrt(A / (p + B));
        return {(p - s.p) * q, q * (1.0 - 0.5 * (p - s.p) / (B + p))};
    }
    const double e = (gamma - 1.0) / (2.0 * gamma);
    return {2.0 * c / (gamma - 1.0) * (std::pow(p / s.p, e) - 1.0),
            1.0 / (s.rho * c) * std::pow(p / s.p, -(gamma + 1.0) / (2.0 * gamma))};
}

}  // namespace

EulerStar euler_star_state(const Primitive& L, const Primitive& R, double gamma)
{
    if (!(L.rho > 0 && R.rho > 0 && L.p > 0 && R.p > 0)) throw DomainError("euler_star_state: inadmissible data");
    const double cl = std::sqrt(gamma * L.p / L.rho);
    const double cr = std::sqrt(gamma * R.p / R.rho);
    const double du = R.u - L.u;
    if (2.0 * (cl + cr) / (gamma - 1.0) <= du) throw DomainError("euler_star_state: data generate vacuum");
    double p = std::max(1e-10, 0.5 * (L.p + R.p) - 0.125 * du * (L.rho + R.rho) * (cl + cr));
    for (int it = 0; it < 100; ++it) {
        const auto fl = pressure_fn(p, L, cl, gamma);
        const auto fr = pressure_fn(p, R, cr, gamma);
        double next = p - (fl.f + fr.f + du) / (fl.df + fr.df);
        if (next <= 0.0) next = 0.5 * p;
        const double change = 2.0 * std::abs(next - p) / (next + p);
        p = next;
        if (change < 1e-12) break;
    }
    const auto fl = pressure_fn(p, L, cl, gamma);
    const auto fr = pressure_fn(p, R, cr, gamma);
    return {p, 0.5 * (L.u + R.u) + 0.5 * (fr.f - fl.f)};
}

namespace {

Primitive euler_sample(const Primitive& L, const Primitive& R, double gamma, const EulerStar& st, double s)
{
    const double g1 = (gamma - 1.0) / (gamma + 1.0);
    const double g2 = (gamma - 1.0) / (2.0 * gamma);
    const double cl = std::sqrt(gamma * L.p / L.rho);
    const double cr = std::sqrt(gamma * R.p / R.rho);
    if (s <= st.u) {
        if (st.p > L.p) {
            const double sl = L.u - cl * std::sqrt((gamma + 1.0) / (2.0 * gamma) * st.p / L.p + g2);
            if (s <= sl) return L;
            const double rho = L.rho * (st.p / L.p + g1) / (g1 * st.p / L.p + 1.0);
            return {rho, st.u, st.p};
        }
        const double shl = L.u - cl;
        if (s <= shl) return L;
        const double cs = cl * std::pow(st.p / L.p, g2);
        const double stl = st.u - cs;
        if (s > stl) return {L.rho * std::pow(st.p / L.p, 1.0 / gamma), st.u, st.p};
        const double c = 2.0 / (gamma + 1.0) * (cl + 0.5 * (gamma - 1.0) * (L.u - s));
        const double u = 2.0 / (gamma + 1.0) * (cl + 0.5 * (gamma - 1.0) * L.u + s);
        const double rho = L.rho * std::pow(c / cl, 2.0 / (gamma - 1.0));
        return {rho, u, L.p * std::pow(c / cl, 2.0 * gamma / (gamma - 1.0))};
    }
    if (st.p > R.p) {
        const double sr = R.u + cr * std::sqrt((gamma + 1.0) / (2.0 * gamma) * st.p / R.p + g2);
        if (s >= sr) return R;
        const double rho = R.rho * (st.p / R.p + g1) / (g1 * st.p / R.p + 1.0);
        return {rho, st.u, st.p};
    }
    const double shr = R.u + cr;
    if (s >= shr) return R;
    const double cs = cr * std::pow(st.p / R.p, g2);
    const double str = st.u + cs;
    if (s < str) return {R.rho * std::pow(st.p / R.p, 1.0 / gamma), st.u, st.p};
    const double c = 2.0 / (gamma + 1.0) * (cr - 0.5 * (gamma - 1.0) * (R.u - s));
    const double u = 2.0 / (gamma + 1.0) * (-cr + 0.5 * (gamma - 1.0) * R.u + s);
    const double rho = R.rho * std::pow(c / cr, 2.0 / (gamma - 1.0));
    return {rho, u, R.p * std::pow(c / cr, 2.0 * gamma / (gamma - 1.0))};
}

}  // namespace

ExactSolution exact_euler_riemann(const Primitive& L, const Primitive& R, double gamma, double x0)
{
    const auto st = euler_star_state(L, R, gamma);
    ExactSolution ex;
    ex.components = 3;
    ex.provenance = "Euler Riemann";
    ex.eval = [=](const double* x, double t, double* q) {
        Primitive w;
        if (t <= 0.0) {
            w = x[0] < x0 ? L : R;
        } else {
            w = euler_sample(L, R, gamma, st, (x[0] - x0) / t);
        }
        euler_conserved(w.rho, &w.u, w.p, 1, gamma, q);
    };
    return ex;
}

// ---- characteristics --------------------------------------------------------

namespace {

double wrap(double x, double a, double b)
{
    const double L = b - a;
    double y = std::fmod(x - a, L);
    if (y < 0.0) y += L;
    return a + y;
}

// w = w0(x - w t) by Newton; w0 is a scalar function of position.
double solve_characteristic(const std::function<double(double)>& w0, double x, double t)
{
    if (t == 0.0) return w0(x);
    auto dw0 = [&](double y) {
        const double h = 1e-6;
        return (w0(y + h) - w0(y - h)) / (2 * h);
    };
    double w = w0(x);
    for (int it = 0; it < 100; ++it) {
        const double y = x - w * t;
        const double jac = 1.0 + t * dw0(y);
        if (jac <= 0.0) throw DomainError("characteristics have crossed (1 + t w0' <= 0)");
        const double r = w - w0(y);
        w -= r / jac;
        if (std::abs(r) < 1e-14) break;
    }
    const double res = std::abs(w - w0(x - w * t));
    if (res > 1e-12) throw DomainError("characteristic Newton did not converge");
    return w;
}

}  // namespace

ExactSolution characteristics_solution(const CaseDefinition& def)
{
    ExactSolution ex;
    ex.components = def.law.components();
    const auto init = def.initial;
    switch (def.law.kind) {
    case LawKind::advection: {
        const auto a = def.law.velocity;
        const int dim = def.dim();
        std::array<bool, 3> per{};
        for (int d = 0; d < dim; ++d) per[d] = def.periodic(d);
        const auto lo = def.lower;
        const auto hi = def.upper;
        ex.provenance = "translated initial data";
        ex.eval = [=](const double* x, double t, double* q) {
            double y[3] = {0, 0, 0};
            for (int d = 0; d < dim; ++d) {
                y[d] = x[d] - a[d] * t;
                if (per[d]) y[d] = wrap(y[d], lo[d], hi[d]);
            }
            init(y, q);
        };
        return ex;
    }
    case LawKind::burgers: {
        if (def.dim() != 1) throw DomainError("characteristics_solution: Burgers only in 1D");
        const double v = def.law.velocity[0];
        ex.provenance = "Burgers characteristics";
        ex.eval = [=](const double* x, double t, double* q) {
            auto phi0 = [&](double y) {
                double p;
                init(&y, &p);
                return p;
            };
            // phi_t + v (phi^2/2)_x = 0: characteristic speed v phi
            q[0] = solve_characteristic(phi0, x[0], v * t);
        };
        return ex;
    }
    case LawKind::euler: {
        const double gamma = def.law.gamma;
        if (def.dim() != 1 || std::abs(gamma - 3.0) > 1e-14) {
            throw DomainError("characteristics_solution: Euler only for 1D gamma = 3");
        }
        const double a = def.lower[0];
        const double b = def.upper[0];
        const bool per = def.periodic(0);
        double q0[3];
        double xa = a;
        init(&xa, q0);
        const double K = euler_pressure(q0, 1, gamma) / std::pow(q0[0], gamma);
        const double sk = std::sqrt(gamma * K);
        // gamma = 3: u +- c are Riemann invariants moving with their own value
        auto w0 = [=](double y, double sgn) {
            if (per) y = wrap(y, a, b);
            double q[3];
            init(&y, q);
            return q[1] / q[0] + sgn * sk * q[0];
        };
        ex.provenance = "isentropic Riemann invariants";
        ex.eval = [=](const double* x, double t, double* q) {
            const double wp = solve_characteristic([&](double y) { return w0(y, 1.0); }, x[0], t);
            const double wm = solve_characteristic([&](double y) { return w0(y, -1.0); }, x[0], t);
            const double u = 0.5 * (wp + wm);
            const double rho = 0.5 * (wp - wm) / sk;
            euler_conserved(rho, &u, K * std::pow(rho, gamma), 1, gamma, q);
        };
        return ex;
    }
    default:
        break;
    }
    throw DomainError("characteristics_solution: no smooth solution for '" + def.name + "'");
}

std::optional<ExactSolution> exact_for_case(const CaseDefinition& def)
{
    const auto& n = def.name;
    if (n == "adv_smooth" || n == "adv_square" || n == "burgers_smooth" || n == "euler_isentropic") {
        return characteristics_solution(def);
    }
    if (n == "burgers_riemann_1d") return exact_scalar_riemann(def.law, 1.0, 0.0, 1.0 / 3.0);
    if (n == "bl_riemann_1d") return exact_scalar_riemann(def.law, 1.0, 0.0, 0.0);
    if (n == "euler_sod") return exact_euler_riemann({1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, def.law.gamma, 0.5);
    return std::nullopt;
}

// ---- finite volumes ---------------------------------------------------------

namespace {

// Rusanov dissipation speed. Scalar fluxes may be non-convex (f' can vanish
// at both states), so |f'| is sampled across the interval.
double face_speed(const Law& law, const double* qa, const double* qb, double ca, double cb)
{
    double a = std::max(ca, cb);
    if (law.is_euler()) return a;
    for (int i = 1; i < 16; ++i) {
        const double v = qa[0] + (qb[0] - qa[0]) * i / 16.0;
        a = std::max(a, law.wavespeed(&v));
    }
    return a;
}

}  // namespace

void FvSolution::sample(const double* x, double* q) const
{
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (int d = 0; d < dim; ++d) {
        const double h = (upper[d] - lower[d]) / cells[d];
        int i = int(std::floor((x[d] - lower[d]) / h));
        i = std::clamp(i, 0, cells[d] - 1);
        flat += stride * std::size_t(i);
        stride *= std::size_t(cells[d]);
    }
    for (int e = 0; e < components; ++e) q[e] = values[e][flat];
}

ExactSolution FvSolution::as_exact() const
{
    ExactSolution ex;
    ex.components = components;
    ex.provenance = fmt::format("Rusanov FV {} cells", cells[0]);
    auto self = std::make_shared<FvSolution>(*this);
    ex.eval = [self](const double* x, double, double* q) { self->sample(x, q); };
    return ex;
}

FvSolution reference_fv_solution(const CaseDefinition& def, std::array<int, 3> cells, double t_final, double cfl)
{
    const int dim = def.dim();
    const int m = def.law.components();
    if (dim > 2) throw DomainError("reference_fv_solution: 1D and 2D only");
    FvSolution s;
    s.case_name = def.name;
    s.dim = dim;
    s.lower = def.lower;
    s.upper = def.upper;
    s.components = m;
    for (int d = dim; d < 3; ++d) cells[d] = 1;
    s.cells = cells;
    const std::size_t N = std::size_t(cells[0]) * cells[1];
    std::array<double, 2> h{};
    for (int d = 0; d < dim; ++d) h[d] = (def.upper[d] - def.lower[d]) / cells[d];
    auto center = [&](int i, int j, double* x) {
        x[0] = def.lower[0] + (i + 0.5) * h[0];
        x[1] = dim > 1 ? def.lower[1] + (j + 0.5) * h[1] : 0.0;
        x[2] = 0.0;
    };

    // initial cell values: midpoint samples
    std::vector<double> U(N * m);
    for (int j = 0; j < cells[1]; ++j) {
        for (int i = 0; i < cells[0]; ++i) {
            double x[3];
            center(i, j, x);
            def.initial(x, &U[(std::size_t(j) * cells[0] + i) * m]);
        }
    }

    std::vector<double> R(N * m);
    std::vector<double> F(N * m);
    std::vector<double> C(N);
    double t = 0.0;
    const double snap = 1e-12 * std::max(1.0, t_final);
    while (t_final - t > snap) {
        for (std::size_t p = 0; p < N; ++p) C[p] = def.law.wavespeed(&U[p * m]);
        std::fill(R.begin(), R.end(), 0.0);
        std::array<double, 2> amax{0.0, 0.0};
        for (int d = 0; d < dim; ++d) {
            for (std::size_t p = 0; p < N; ++p) def.law.flux(&U[p * m], d, &F[p * m]);
            const int nd = cells[d];
            const int lines = d == 0 ? cells[1] : cells[0];
            const bool per = def.periodic(d);
            std::vector<double> line_max(lines, 0.0);
#pragma omp parallel for schedule(static)
            for (int l = 0; l < lines; ++l) {
                double gl[5], gr[5], fg[5], flux[5];
                auto cell = [&](int a) -> std::size_t {
                    return d == 0 ? std::size_t(l) * cells[0] + a : std::size_t(a) * cells[0] + l;
                };
                for (int face = 0; face <= nd; ++face) {
                    const double* qa;
                    const double* qb;
                    const double* fa;
                    const double* fb;
                    double ca;
                    double cb;
                    // ghost at a boundary face
                    auto ghost = [&](int side, double* g) {
                        const int inner = side == 0 ? 0 : nd - 1;
                        const auto kind = def.bc[d][side];
                        if (kind == BoundaryKind::dirichlet) {
                            double x[3];
                            const int i = d == 0 ? inner : l;
                            const int j = d == 0 ? l : inner;
                            center(i, j, x);
                            x[d] = side == 0 ? def.lower[d] : def.upper[d];
                            def.boundary(x, t, g);
                        } else {
                            const double* src = &U[cell(inner) * m];
                            std::copy(src, src + m, g);
                        }
                    };
                    if (face == 0 || face == nd) {
                        if (per) {
                            if (face == nd) continue;  // same face as 0
                            const std::size_t a = cell(nd - 1);
                            const std::size_t b = cell(0);
                            qa = &U[a * m];
                            fa = &F[a * m];
                            ca = C[a];
                            qb = &U[b * m];
                            fb = &F[b * m];
                            cb = C[b];
                        } else if (face == 0) {
                            ghost(0, gl);
                            def.law.flux(gl, d, fg);
                            qa = gl;
                            fa = fg;
                            ca = def.law.wavespeed(gl);
                            const std::size_t b = cell(0);
                            qb = &U[b * m];
                            fb = &F[b * m];
                            cb = C[b];
                        } else {
                            ghost(1, gr);
                            def.law.flux(gr, d, fg);
                            const std::size_t a = cell(nd - 1);
                            qa = &U[a * m];
                            fa = &F[a * m];
                            ca = C[a];
                            qb = gr;
                            fb = fg;
                            cb = def.law.wavespeed(gr);
                        }
                    } else {
                        const std::size_t a = cell(face - 1);
                        const std::size_t b = cell(face);
                        qa = &U[a * m];
                        fa = &F[a * m];
                        ca = C[a];
                        qb = &U[b * m];
                        fb = &F[b * m];
                        cb = C[b];
                    }
                    const double alpha = face_speed(def.law, qa, qb, ca, cb);
                    line_max[l] = std::max(line_max[l], alpha);
                    for (int e = 0; e < m; ++e) flux[e] = 0.5 * (fa[e] + fb[e]) - 0.5 * alpha * (qb[e] - qa[e]);
                    const int left = face == 0 ? (per ? nd - 1 : -1) : face - 1;
                    const int right = face == nd ? -1 : face;
                    for (int e = 0; e < m; ++e) {
                        if (left >= 0) R[cell(left) * m + e] -= flux[e] / h[d];
                        if (right >= 0) R[cell(right) * m + e] += flux[e] / h[d];
                    }
                }
            }
            for (double a : line_max) amax[d] = std::max(amax[d], a);
        }
        double inv = 0.0;
        for (int d = 0; d < dim; ++d) inv += amax[d] / h[d];
        double dt = inv > 0.0 ? cfl / inv : t_final - t;
        if (t + dt > t_final) dt = t_final - t;
        for (std::size_t i = 0; i < U.size(); ++i) U[i] += dt * R[i];
        t += dt;
        for (double v : U) {
            if (!std::isfinite(v)) throw BlowUp("reference_fv_solution: non-finite value at t=" + std::to_string(t));
        }
    }
    s.t = t_final;
    s.values.assign(m, std::vector<double>(N));
    for (std::size_t p = 0; p < N; ++p) {
        for (int e = 0; e < m; ++e) s.values[e][p] = U[p * m + e];
    }
    return s;
}

void save_fv(const FvSolution& s, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "igc-fv 1 " << s.case_name << ' ' << s.dim << ' ' << s.cells[0] << ' ' << s.cells[1] << ' '
        << s.cells[2] << ' ' << s.components << ' ' << fmt::format("{:.17g}", s.t);
    for (int d = 0; d < 3; ++d) out << ' ' << fmt::format("{:.17g} {:.17g}", s.lower[d], s.upper[d]);
    out << '\n';
    for (const auto& v : s.values) out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * 8));
    if (!out) throw Error("write failed: " + path);
}

FvSolution load_fv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    int version = 0;
    FvSolution s;
    hs >> magic >> version >> s.case_name >> s.dim >> s.cells[0] >> s.cells[1] >> s.cells[2] >> s.components >> s.t;
    for (int d = 0; d < 3; ++d) hs >> s.lower[d] >> s.upper[d];
    if (!hs || magic != "igc-fv" || version != 1) throw Error("malformed FV file " + path);
    const std::size_t N = std::size_t(s.cells[0]) * s.cells[1] * s.cells[2];
    s.values.assign(s.components, std::vector<double>(N));
    for (auto& v : s.values) in.read(reinterpret_cast<char*>(v.data()), std::streamsize(N * 8));
    if (!in) throw Error("truncated FV file " + path);
    return s;
}

FvSolution cached_fv_solution(const CaseDefinition& def, std::array<int, 3> cells, double t_final,
                              const std::string& dir, double cfl)
{
    for (int d = def.dim(); d < 3; ++d) cells[d] = 1;
    const auto path = (std::filesystem::path(dir) /
                       fmt::format("{}_{}x{}_t{:.6g}_cfl{:.3g}.fv", def.name, cells[0], cells[1], t_final, cfl))
                          .string();
    if (std::filesystem::exists(path)) {
        try {
            auto s = load_fv(path);
            if (s.case_name == def.name && s.cells == cells && s.t == t_final) return s;
        } catch (const Error&) {
            // recompute below
        }
    }
    auto s = reference_fv_solution(def, cells, t_final, cfl);
    std::filesystem::create_directories(dir);
    save_fv(s, path);
    return s;
}

// ---- norms ------------------------------------------------------------------

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    if (n < 1) throw DomainError("gauss_legendre: n >= 1 required");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

std::string to_string(Norm n)
{
    return n == Norm::L1 ? "L1" : "L2";
}

std::vector<double> error_norms(const TensorSpace& space, const State& s, const ExactSolution& exact, double t,
                                Norm norm, int extra_points)
{
    const int dim = space.dim();
    const int m = int(s.size());
    if (exact.components != m) throw DomainError("error_norms: component count mismatch");
    if (t > exact.t_max) throw DomainError("error_norms: exact solution not valid at this time");
    std::array<std::vector<double>, 3> pts;
    std::array<std::vector<double>, 3> wts;
    for (int d = 0; d < dim; ++d) {
        const auto& sp = space.space(d);
        std::vector<double> gx;
        std::vector<double> gw;
        gauss_legendre(sp.degree() + extra_points, gx, gw);
        const double he = sp.element_size();
        for (int el = 0; el < sp.elements(); ++el) {
            const double a = sp.lower() + el * he;
            for (std::size_t g = 0; g < gx.size(); ++g) {
                pts[d].push_back(a + 0.5 * he * (gx[g] + 1.0));
                wts[d].push_back(0.5 * he * gw[g]);
            }
        }
    }
    GridOperators ops(space, pts, 0);
    std::vector<std::vector<double>> vals(m);
    std::vector<double> scratch;
    for (int e = 0; e < m; ++e) ops.eval(s[e].values, {0, 0, 0}, vals[e], scratch);
    const Shape g = ops.grid_shape();
    std::vector<double> acc(m, 0.0);
    std::vector<double> q(m);
    for (int l = 0; l < g.n[2]; ++l) {
        for (int j = 0; j < g.n[1]; ++j) {
            for (int i = 0; i < g.n[0]; ++i) {
                const int idx[3] = {i, j, l};
                double x[3] = {0, 0, 0};
                double w = 1.0;
                for (int d = 0; d < dim; ++d) {
                    x[d] = pts[d][idx[d]];
                    w *= wts[d][idx[d]];
                }
                exact.eval(x, t, q.data());
                const std::size_t p = g.index(i, j, l);
                for (int e = 0; e < m; ++e) {
                    const double diff = std::abs(vals[e][p] - q[e]);
                    acc[e] += w * (norm == Norm::L1 ? diff : diff * diff);
                }
            }
        }
    }
    if (norm == Norm::L2) {
        for (auto& a : acc) a = std::sqrt(a);
    }
    return acc;
}

double observed_rate(double e_coarse, double h_coarse, double e_fine, double h_fine)
{
    if (!(e_coarse > 0.0) || !(e_fine > 0.0)) return nan_v;
    return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

std::string ConvergenceTable::to_csv() const
{
    std::string out = "case,k,n_elements,h,norm,error,rate\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{:.17g},{},{:.17g},{:.17g}\n", r.case_name, r.k, r.n_elements, r.h, r.norm,
                           r.error, r.rate);
    }
    return out;
}

const ConvergenceRow* ConvergenceTable::find(int k, int n_elements, const std::string& norm) const
{
    for (const auto& r : rows) {
        if (r.k == k && r.n_elements == n_elements && r.norm == norm) return &r;
    }
    return nullptr;
}

double ConvergenceTable::finest_rate(int k, const std::string& norm) const
{
    const ConvergenceRow* best = nullptr;
    for (const auto& r : rows) {
        if (r.k == k && r.norm == norm && (!best || r.n_elements > best->n_elements)) best = &r;
    }
    return best ? best->rate : nan_v;
}

ConvergenceTable convergence_study(const StudySpec& spec)
{
    if (spec.meshes.size() < 2) throw DomainError("convergence_study needs at least two meshes");
    if (!spec.exact.eval) throw DomainError("convergence_study needs an exact or reference solution");
    const int m = spec.def.law.components();
    std::vector<int> comps = spec.components;
    if (comps.empty()) {
        for (int e = 0; e < m; ++e) comps.push_back(e);
    }
    const auto names = spec.def.law.component_names();

    struct Job {
        int k;
        int n;
        std::vector<std::vector<double>> errors;  // [norm][component]
        std::string failure;
    };
    std::vector<Job> jobs;
    for (int k : spec.degrees) {
        for (int n : spec.meshes) jobs.push_back({k, n, {}, {}});
    }

#pragma omp parallel for schedule(dynamic)
    for (int ji = 0; ji < int(jobs.size()); ++ji) {
        auto& job = jobs[ji];
        try {
            SemiDiscreteSystem sys(spec.def, {job.n, job.n, job.n}, job.k, spec.solver);
            RunControl ctl;
            ctl.dt = spec.dt;
            ctl.t_final = spec.t_final;
            const auto s = run(sys, ctl);
            for (auto nrm : spec.norms) job.errors.push_back(error_norms(sys.space(), s.fields, spec.exact, s.t, nrm));
        } catch (const std::exception& e) {
            job.failure = e.what();
        }
    }

    ConvergenceTable table;
    const double len = spec.def.upper[0] - spec.def.lower[0];
    for (int k : spec.degrees) {
        for (std::size_t ni = 0; ni < spec.norms.size(); ++ni) {
            for (int e : comps) {
                const std::string label =
                    m == 1 ? to_string(spec.norms[ni]) : to_string(spec.norms[ni]) + ":" + names[e];
                const ConvergenceRow* prev = nullptr;
                std::size_t first = table.rows.size();
                for (const auto& job : jobs) {
                    if (job.k != k) continue;
                    ConvergenceRow r;
                    r.case_name = spec.def.name;
                    r.k = k;
                    r.n_elements = job.n;
                    r.h = len / job.n;
                    r.norm = label;
                    r.failure = job.failure;
                    if (job.failure.empty()) r.error = job.errors[ni][e];
                    if (table.rows.size() > first) prev = &table.rows.back();
                    if (prev && prev->failure.empty() && r.failure.empty()) {
                        r.rate = observed_rate(prev->error, prev->h, r.error, r.h);
                    }
                    table.rows.push_back(r);
                }
            }
        }
    }
    return table;
}

}  // namespace igc
