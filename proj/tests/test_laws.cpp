#include "doctest.h"

#include <cmath>
#include <set>

#include "igc/laws.hpp"

using namespace igc;

namespace {

std::vector<Law> scalar_laws()
{
    return {Law::advection(1, {1, 0, 0}), Law::advection(2, {1, 1, 0}), Law::burgers(1, {1, 0, 0}),
            Law::burgers(2, {1, 1, 0}),   Law::buckley_leverett(),       Law::bl_gravity()};
}

double flux_at(const Law& law, double phi, int dir)
{
    double f = 0.0;
    law.flux(&phi, dir, &f);
    return f;
}

}  // namespace

TEST_CASE("scalar flux examples")
{
    CHECK(flux_at(Law::burgers(1, {1, 0, 0}), 2.0, 0) == doctest::Approx(2.0));
    CHECK(flux_at(Law::buckley_leverett(), 0.5, 0) == doctest::Approx(0.5));
    const auto g = Law::bl_gravity();
    CHECK(flux_at(g, 0.5, 0) == doctest::Approx(0.5));
    CHECK(flux_at(g, 0.5, 1) == doctest::Approx(-0.125));
    CHECK(flux_at(g, 1.0, 0) == doctest::Approx(1.0));
    CHECK(flux_at(g, 1.0, 1) == doctest::Approx(1.0));
    const auto adv = Law::advection(2, {1, 1, 0});
    CHECK(flux_at(adv, 0.3, 0) == doctest::Approx(0.3));
    CHECK(flux_at(adv, 0.3, 1) == doctest::Approx(0.3));
}

TEST_CASE("flux derivative matches central differences")
{
    const double step = 1e-6;
    for (const auto& law : scalar_laws()) {
        for (double phi = -1.5; phi <= 1.5; phi += 0.01) {
            std::array<double, 3> fp{};
            law.flux_derivative(phi, fp.data());
            for (int d = 0; d < law.dim; ++d) {
                const double fd = (flux_at(law, phi + step, d) - flux_at(law, phi - step, d)) / (2 * step);
                CHECK(std::abs(fd - fp[d]) <= 1e-6 * std::max(1.0, std::abs(fp[d])));
            }
        }
    }
}

TEST_CASE("gravity flux x-component equals the 1D Buckley-Leverett flux")
{
    const auto g = Law::bl_gravity();
    const auto b = Law::buckley_leverett();
    for (double phi = -1.5; phi <= 1.5; phi += 0.037) CHECK(flux_at(g, phi, 0) == flux_at(b, phi, 0));
}

TEST_CASE("wavespeeds")
{
    double phi = 0.7;
    CHECK(Law::advection(2, {1, 1, 0}).wavespeed(&phi) == doctest::Approx(std::sqrt(2.0)));
    phi = -0.5;
    CHECK(Law::burgers(1, {1, 0, 0}).wavespeed(&phi) == doctest::Approx(0.5));
    const auto e = Law::euler(1, 1.4);
    double q[3];
    const double u = 0.0;
    euler_conserved(1.0, &u, 1.0, 1, 1.4, q);
    CHECK(e.wavespeed(q) == doctest::Approx(1.18322).epsilon(1e-5));
    q[0] = -1.0;
    CHECK_THROWS_AS(e.wavespeed(q), InadmissibleState);
    q[0] = 1.0;
    q[2] = -1.0;
    CHECK_THROWS_AS(e.wavespeed(q), InadmissibleState);
}

TEST_CASE("Euler pressure and temperature")
{
    double q[3] = {1.0, 0.0, 2.5};
    CHECK(euler_pressure(q, 1, 1.4) == doctest::Approx(1.0));
    double r[3] = {1.0, 0.0, 0.5};
    CHECK(euler_pressure(r, 1, 3.0) == doctest::Approx(1.0));
    CHECK(euler_temperature(r, 1, 3.0) == doctest::Approx(1.0));
    double s[4] = {0.7, 0.0, 0.0, 1.3};
    CHECK(euler_pressure(s, 2, 1.4) == (1.4 - 1.0) * 1.3);
    double bad[3] = {0.0, 0.0, 1.0};
    CHECK_THROWS_AS(euler_temperature(bad, 1, 1.4), InadmissibleState);
    CHECK_THROWS_AS(check_admissible(bad, 1, 1.4, "x=0.5"), InadmissibleState);
    try {
        check_admissible(bad, 1, 1.4, "x=0.5");
    } catch (const InadmissibleState& e) {
        CHECK(std::string(e.what()).find("x=0.5") != std::string::npos);
    }
}

TEST_CASE("Euler flux of a state at rest is pure pressure")
{
    const auto e = Law::euler(2, 1.4);
    double q[4];
    const double u[2] = {0.0, 0.0};
    euler_conserved(1.3, u, 0.7, 2, 1.4, q);
    double f[4];
    e.flux(q, 1, f);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    CHECK(f[2] == doctest::Approx(0.7));
    CHECK(f[3] == 0.0);
    // moving state: mass flux is the momentum
    const double v[2] = {0.3, -0.4};
    euler_conserved(2.0, v, 1.0, 2, 1.4, q);
    e.flux(q, 0, f);
    CHECK(f[0] == doctest::Approx(0.6));
    CHECK(f[1] == doctest::Approx(2.0 * 0.09 + 1.0));
    CHECK(f[2] == doctest::Approx(2.0 * 0.3 * -0.4));
    CHECK(f[3] == doctest::Approx((1.0 / 0.4 + 0.5 * 2.0 * 0.25 + 1.0) * 0.3));
}

TEST_CASE("builtin cases")
{
    std::set<std::string> seen;
    for (const auto& name : builtin_case_names()) {
        const auto c = builtin_case(name);
        CHECK(c.name == name);
        CHECK(c.t_final > 0.0);
        CHECK(c.dt > 0.0);
        CHECK(c.constants.c_rb > 0.0);
        CHECK(c.constants.c_max > 0.0);
        CHECK(c.constants.c_lin > 0.0);
        CHECK(bool(c.initial));
        for (int d = 0; d < c.dim(); ++d) {
            for (int s = 0; s < 2; ++s) {
                if (c.bc[d][s] == BoundaryKind::dirichlet) CHECK(bool(c.boundary));
            }
            // periodic directions are periodic on both sides
            CHECK((c.bc[d][0] == BoundaryKind::periodic) == (c.bc[d][1] == BoundaryKind::periodic));
        }
        seen.insert(name);
    }
    CHECK(seen.size() == 11);
    CHECK_THROWS_AS(builtin_case("nope"), DomainError);

    const auto b = builtin_case("burgers_riemann_1d");
    CHECK(b.t_final == 0.2);
    CHECK(b.dt == 1e-5);
    double q = 0;
    double x = 1.0 / 3.0 - 1e-9;
    b.initial(&x, &q);
    CHECK(q == 1.0);
    x = 1.0 / 3.0 + 1e-9;
    b.initial(&x, &q);
    CHECK(q == 0.0);

    const auto so = builtin_case("euler_shu_osher");
    CHECK(so.lower[0] == 0.0);
    CHECK(so.upper[0] == 10.0);
    double s[3];
    x = 0.5;
    so.initial(&x, s);
    CHECK(s[0] == doctest::Approx(3.857));
    CHECK(s[1] / s[0] == doctest::Approx(2.629));
    CHECK(euler_pressure(s, 1, 1.4) == doctest::Approx(10.333));

    const auto sod = builtin_case("euler_sod");
    CHECK(sod.law.gamma == 1.4);
    CHECK(sod.t_final == 0.25);
    CHECK(sod.dt == 1e-4);
    x = 0.25;
    sod.initial(&x, s);
    CHECK(s[2] == doctest::Approx(2.5));

    const auto ise = builtin_case("euler_isentropic");
    CHECK(ise.law.gamma == 3.0);
    CHECK(ise.constants.c_max == 0.2);
    CHECK(ise.constants.prandtl == 0.5);

    CHECK(builtin_case("adv_smooth").constants.c_max == 0.5);
    CHECK(builtin_case("bl_riemann_1d").constants.c_max == 0.25);
    const auto lap = euler_constants(Regularization::laplacian, 1);
    CHECK(lap.c_max == 0.1);
    const auto gp2 = euler_constants(Regularization::guermond_popov, 2);
    CHECK(gp2.c_max == 0.1);
    CHECK(gp2.prandtl == 1.0);
}

TEST_CASE("2D Riemann data are mirror symmetric on the extended square")
{
    const auto c = builtin_case("euler_case12");
    for (double a : {0.1, 0.3, 0.7, 0.95}) {
        for (double b : {0.2, 0.45, 0.55, 0.8}) {
            double p[2] = {a, b};
            double m[2] = {2.0 - a, b};
            double qp[4];
            double qm[4];
            c.initial(p, qp);
            c.initial(m, qm);
            CHECK(qp[0] == qm[0]);
            CHECK(qp[1] == -qm[1]);
            CHECK(qp[2] == qm[2]);
            CHECK(qp[3] == qm[3]);
        }
    }
    double corner[2] = {0.75, 0.75};
    double q[4];
    c.initial(corner, q);
    CHECK(q[0] == doctest::Approx(17.0 / 32.0));
    CHECK(euler_pressure(q, 2, 1.4) == doctest::Approx(0.4));

    const auto bz = builtin_case("burgers_riemann_2d");
    double pts[4][2] = {{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.25}, {0.75, 0.75}};
    const double want[4] = {0.5, -0.2, 0.8, -1.0};
    for (int i = 0; i < 4; ++i) {
        double v;
        bz.initial(pts[i], &v);
        CHECK(v == want[i]);
        double mirrored[2] = {2.0 - pts[i][0], 2.0 - pts[i][1]};
        bz.initial(mirrored, &v);
        CHECK(v == want[i]);
    }
}

TEST_CASE("Burgers characteristics solve")
{
    auto phi0 = [](double x) { return std::exp(x) - 1.0; };
    auto dphi0 = [](double x) { return std::exp(x); };
    const double x = 0.5;
    const double t = 0.01;
    const double phi = burgers_characteristic(phi0, dphi0, x, t);
    CHECK(std::abs(phi - phi0(x - phi * t)) < 1e-12);
    CHECK(burgers_characteristic(phi0, dphi0, x, 0.0) == phi0(x));
    // decreasing data folds after t = 1/max|phi0'|
    auto down = [](double x) { return -x; };
    auto ddown = [](double) { return -1.0; };
    CHECK_THROWS_AS(burgers_characteristic(down, ddown, 0.2, 1.5), DomainError);

    // the boundary rate matches a difference quotient of the boundary data
    const auto c = builtin_case("burgers_smooth");
    const double x0 = 0.0;
    double g1;
    double g2;
    double gt;
    c.boundary(&x0, 0.005 - 1e-6, &g1);
    c.boundary(&x0, 0.005 + 1e-6, &g2);
    c.boundary_rate(&x0, 0.005, &gt);
    CHECK(gt == doctest::Approx((g2 - g1) / 2e-6).epsilon(1e-6));
}
