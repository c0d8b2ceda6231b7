#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "igc/stabilization.hpp"

using namespace igc;

namespace {

using Dense = std::vector<double>;

std::vector<double> dense_solve(Dense a, std::vector<double> b, int n)
{
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i) {
            if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
        }
        for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
        std::swap(b[k], b[p]);
        for (int i = k + 1; i < n; ++i) {
            const double l = a[i * n + k] / a[k * n + k];
            for (int j = k; j < n; ++j) a[i * n + j] -= l * a[k * n + j];
            b[i] -= l * b[k];
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        for (int j = k + 1; j < n; ++j) b[k] -= a[k * n + j] * b[j];
        b[k] /= a[k * n + k];
    }
    return b;
}

// y = A x for a dense rows x cols matrix
std::vector<double> mul(const Dense& a, int rows, int cols, const std::vector<double>& x)
{
    std::vector<double> y(rows, 0.0);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) y[i] += a[i * cols + j] * x[j];
    }
    return y;
}

// Dense matrix of basis values / derivatives of `space` at `pts`, evaluated
// point by point through eval().
Dense point_matrix(const SplineSpace1D& space, const std::vector<double>& pts, int deriv)
{
    const int n = space.size();
    Dense m(pts.size() * n, 0.0);
    for (std::size_t r = 0; r < pts.size(); ++r) {
        const auto b = space.eval(pts[r], deriv);
        for (int l = 0; l <= space.degree(); ++l) m[r * n + b.index(l)] += b(deriv, l);
    }
    return m;
}

// Geometric oracle: centroid c is adjacent to point p along a direction if
// no other Greville point lies strictly between them.
bool adjacent(const std::vector<double>& g, double length, bool periodic, int p, double c)
{
    const double x = g[p];
    auto between = [&](double lo, double hi, double y) { return y > lo && y < hi; };
    for (std::size_t q = 0; q < g.size(); ++q) {
        if (int(q) == p) continue;
        if (!periodic) {
            if (between(std::min(x, c), std::max(x, c), g[q])) return false;
            continue;
        }
        // shortest arc from x to c
        double d = c - x;
        d -= length * std::round(d / length);
        for (double shift : {-length, 0.0, length}) {
            const double y = g[q] + shift;
            if (between(std::min(x, x + d), std::max(x, x + d), y)) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("BDF weights")
{
    for (int q = 1; q <= 4; ++q) {
        std::vector<double> t(q + 1);
        for (int j = 0; j <= q; ++j) t[j] = 2.0 - 0.01 * j;
        const auto w = bdf_weights(t);
        double s0 = 0.0;
        double s1 = 0.0;
        for (int j = 0; j <= q; ++j) {
            s0 += w[j] * 3.0;
            s1 += w[j] * t[j];
        }
        CHECK(std::abs(s0) < 1e-9);
        CHECK(s1 == doctest::Approx(1.0).epsilon(1e-10));
    }
    // quartic, BDF4 with dt = 0.1 at t = 1
    std::vector<double> t{1.0, 0.9, 0.8, 0.7, 0.6};
    const auto w = bdf_weights(t);
    double d = 0.0;
    for (int j = 0; j < 5; ++j) d += w[j] * std::pow(t[j], 4);
    CHECK(std::abs(d - 4.0) < 1e-9);
    // nonuniform spacing stays exact for cubics
    std::vector<double> u{1.0, 0.97, 0.9, 0.8};
    const auto v = bdf_weights(u);
    double e = 0.0;
    for (int j = 0; j < 4; ++j) e += v[j] * (u[j] * u[j] * u[j] - 2 * u[j]);
    CHECK(e == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("history buffer ramps the order and keeps five snapshots")
{
    HistoryBuffer h;
    Shape s;
    s.n = {3, 1, 1};
    CHECK_THROWS_AS(h.time_derivative(0), DomainError);
    for (int step = 0; step < 8; ++step) {
        const double t = 0.1 * step;
        h.push(t, {FieldCoeffs(s, t)});
        CHECK(h.order() == std::min(step, 4));
        CHECK(h.size() == std::min(step + 1, 5));
        const auto d = h.time_derivative(0);
        for (double x : d.values) CHECK(x == doctest::Approx(step == 0 ? 0.0 : 1.0).epsilon(1e-10));
    }
    CHECK(h.time(0) == doctest::Approx(0.7));
    CHECK(h.time(4) == doctest::Approx(0.3));
    CHECK_THROWS_AS(h.push(0.7, {FieldCoeffs(s, 0.0)}), DomainError);

    HistoryBuffer q;
    for (int j = 0; j < 5; ++j) {
        const double t = 0.6 + 0.1 * j;
        q.push(t, {FieldCoeffs(s, std::pow(t, 4))});
    }
    CHECK(std::abs(q.time_derivative(0).values[1] - 4.0) < 1e-9);

    HistoryBuffer c;
    for (int j = 0; j < 5; ++j) c.push(j, {FieldCoeffs(s, 2.5)});
    for (double x : c.time_derivative(0).values) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("local residual max, 1D examples")
{
    GridTopology g;
    g.shape.n = {3, 1, 1};
    const std::vector<double> r{0.3, -0.7};
    const auto m = local_residual_max(g, r);
    CHECK(m[0] == 0.3);
    CHECK(m[1] == 0.7);
    CHECK(m[2] == 0.7);
    const auto z = local_residual_max(g, std::vector<double>{0.0, 0.0});
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK_THROWS_AS(local_residual_max(g, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("local residual max matches geometric adjacency in 2D")
{
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto tx : {Topology::open, Topology::periodic}) {
        for (auto ty : {Topology::open, Topology::periodic}) {
            TensorSpace ts({SplineSpace1D::make(0, 1, 6, 3, tx), SplineSpace1D::make(0, 2, 5, 2, ty)});
            GridTopology g{ts.shape(), {tx == Topology::periodic, ty == Topology::periodic, false}};
            const Shape cs = ts.centroid_shape();
            std::vector<double> r(cs.size());
            for (auto& v : r) v = unif(rng);
            const auto m = local_residual_max(g, r);
            for (int j = 0; j < ts.shape().n[1]; ++j) {
                for (int i = 0; i < ts.shape().n[0]; ++i) {
                    double want = 0.0;
                    int count = 0;
                    for (int cj = 0; cj < cs.n[1]; ++cj) {
                        if (!adjacent(ts.greville(1), 2.0, g.periodic[1], j, ts.centroids(1)[cj])) continue;
                        for (int ci = 0; ci < cs.n[0]; ++ci) {
                            if (!adjacent(ts.greville(0), 1.0, g.periodic[0], i, ts.centroids(0)[ci])) continue;
                            want = std::max(want, std::abs(r[cs.index(ci, cj)]));
                            ++count;
                        }
                    }
                    const bool corner_x = !g.periodic[0] && (i == 0 || i == ts.shape().n[0] - 1);
                    const bool corner_y = !g.periodic[1] && (j == 0 || j == ts.shape().n[1] - 1);
                    CHECK(count == (corner_x ? 1 : 2) * (corner_y ? 1 : 2));
                    CHECK(m[ts.shape().index(i, j)] == want);
                }
            }
        }
    }
}

TEST_CASE("stencil max and normalization against brute force")
{
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (bool px : {false, true}) {
        for (bool py : {false, true}) {
            GridTopology g;
            g.shape.dim = 2;
            g.shape.n = {13, 11, 1};
            g.periodic = {px, py, false};
            std::vector<double> v(g.shape.size());
            for (auto& x : v) x = unif(rng);
            const auto smax = stencil_max(g, v, 4);
            const auto m = normalization(g, v);
            auto collect = [&](int i, int j, int half) {
                std::vector<double> out;
                for (int dj = -half; dj <= half; ++dj) {
                    int jj = j + dj;
                    if (py) jj = (jj % 11 + 11) % 11;
                    else if (jj < 0 || jj >= 11) continue;
                    for (int di = -half; di <= half; ++di) {
                        int ii = i + di;
                        if (px) ii = (ii % 13 + 13) % 13;
                        else if (ii < 0 || ii >= 13) continue;
                        out.push_back(v[g.shape.index(ii, jj)]);
                    }
                }
                return out;
            };
            for (int j = 0; j < 11; ++j) {
                for (int i = 0; i < 13; ++i) {
                    const auto wide = collect(i, j, 4);
                    CHECK(smax[g.shape.index(i, j)] == *std::max_element(wide.begin(), wide.end()));
                    const auto box = collect(i, j, 1);
                    const double hi = *std::max_element(box.begin(), box.end());
                    const double lo = *std::min_element(box.begin(), box.end());
                    double mean = 0.0;
                    for (double x : box) mean += x;
                    mean /= double(box.size());
                    const double want = (hi - lo) - std::abs(v[g.shape.index(i, j)] - mean);
                    CHECK(m[g.shape.index(i, j)] == doctest::Approx(want).epsilon(1e-13));
                    CHECK(m[g.shape.index(i, j)] >= 0.0);
                }
            }
        }
    }
    GridTopology g1;
    g1.shape.n = {5, 1, 1};
    const std::vector<double> flat(5, 2.0);
    for (double x : normalization(g1, flat)) CHECK(x == 0.0);
    CHECK(normalization_floor(flat) == 1e-14);
    CHECK(normalization_floor(std::vector<double>{0.0, 3.0}) == doctest::Approx(3e-12));
}

TEST_CASE("pointwise viscosity formulas")
{
    CHECK(residual_viscosity(4.0, 0.01, 0.0, 0.5, 1e-14) == 0.0);
    CHECK(residual_viscosity(4.0, 0.01, 10.0, 0.5, 1e-14) == doctest::Approx(8e-3));
    CHECK(residual_viscosity(4.0, 0.01, 0.0, 0.0, 1e-14) == 0.0);
    CHECK(first_order_viscosity(0.5, 0.01, 2.0) == doctest::Approx(0.01));
    CHECK(artificial_viscosity(8e-3, 1e-2) == 8e-3);
    CHECK(artificial_viscosity(1e3, 1e-2) == 1e-2);
    CHECK(artificial_viscosity(0.0, 5.0) == 0.0);
    CHECK(gp_kappa(8e-3, 0.5, 4.0) == doctest::Approx(1e-3));
    CHECK(gp_kappa(1.0, 1.0, 4.0) == doctest::Approx(0.25));
}

TEST_CASE("compute_viscosity bounds and modes")
{
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    GridTopology g;
    g.shape.dim = 2;
    g.shape.n = {20, 16, 1};
    g.periodic = {true, false, false};
    Shape cs = g.shape;
    cs.n[1] = 15;
    const std::size_t n = g.shape.size();
    std::vector<double> h(n, 0.05);
    std::vector<double> c(n);
    std::vector<double> vals(n);
    std::vector<double> vals2(n);
    std::vector<double> res(cs.size());
    std::vector<double> res2(cs.size());
    for (auto& x : c) x = std::abs(unif(rng)) + 0.1;
    for (auto& x : vals) x = unif(rng);
    for (auto& x : vals2) x = 3 * unif(rng);
    for (auto& x : res) x = 50 * unif(rng);
    for (auto& x : res2) x = 5 * unif(rng);
    StabConstants k{4.0, 0.2, 0.25, 0.5};
    ViscosityInputs in{g, cs, h, c, {res, res2}, {vals, vals2}};
    ViscosityOptions opt;
    opt.mode = ViscosityMode::euler_gp;
    const auto st = compute_viscosity(in, k, opt);
    const double cmax = *std::max_element(c.begin(), c.end());
    const auto smax = stencil_max(g, c, 4);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(st.nu_art[i] >= 0.0);
        CHECK(st.nu_art[i] <= st.nu_fo[i]);
        CHECK(st.nu_fo[i] <= k.c_max * h[i] * cmax * (1 + 1e-15));
        CHECK(st.nu_lin[i] == doctest::Approx(k.c_lin * h[i] * smax[i]));
        if (st.nu_art[i] > 0) CHECK(st.kappa[i] / st.nu_art[i] == doctest::Approx(k.prandtl / k.c_rb));
    }
    CHECK(st.frozen);

    // equation order does not matter (max is order-free)
    ViscosityInputs swapped{g, cs, h, c, {res2, res}, {vals2, vals}};
    const auto sw = compute_viscosity(swapped, k, opt);
    CHECK(sw.nu_art == st.nu_art);

    const std::vector<double> zeros(cs.size(), 0.0);
    ViscosityInputs zero{g, cs, h, c, {zeros}, {vals}};
    opt.mode = ViscosityMode::scalar;
    const auto z = compute_viscosity(zero, k, opt);
    for (double x : z.nu_art) CHECK(x == 0.0);
    opt.nonlinear = false;
    const auto off = compute_viscosity(in, k, opt);
    for (double x : off.nu_art) CHECK(x == 0.0);
    opt.linear = false;
    const auto nolin = compute_viscosity(in, k, opt);
    for (double x : nolin.nu_lin) CHECK(x == 0.0);

    // Burgers: wavespeed |phi| with phi in [-1, 0.8] gives c = 1
    GridTopology g1;
    g1.shape.n = {9, 1, 1};
    std::vector<double> phi{-1.0, -0.5, 0.0, 0.2, 0.8, 0.8, 0.1, 0.0, -0.3};
    std::vector<double> speed(9);
    for (int i = 0; i < 9; ++i) speed[i] = std::abs(phi[i]);
    const auto m1 = stencil_max(g1, speed, 4);
    CHECK(m1[4] == 1.0);
    CHECK(m1[8] == 0.8);  // clamped stencil at the right boundary
}

TEST_CASE("linear stabilization annihilates low-degree polynomials")
{
    for (auto topo : {Topology::open}) {
        for (int k = 2; k <= 6; ++k) {
            TensorSpace ts({SplineSpace1D::make(0, 1, 7, k, topo), SplineSpace1D::make(-1, 1, 6, k, topo)});
            CoarseStabOperator op(ts);
            for (int a = 0; a <= k - 1; ++a) {
                for (int b = 0; a + b <= k - 1; ++b) {
                    std::vector<double> s(ts.size());
                    for (std::size_t p = 0; p < ts.size(); ++p) {
                        const auto x = ts.point(p);
                        s[p] = std::pow(x[0], a) * std::pow(x[1], b);
                    }
                    const auto c = fit_field(ts, s);
                    std::vector<double> out;
                    op.apply(c.values, out);
                    double m = 0.0;
                    for (double v : out) m = std::max(m, std::abs(v));
                    CHECK(m < 1e-10);
                }
            }
        }
    }
    TensorSpace per({SplineSpace1D::make(0, 1, 10, 3, Topology::periodic)});
    CoarseStabOperator op(per);
    std::vector<double> out;
    op.apply(std::vector<double>(10, 1.7), out);
    for (double v : out) CHECK(std::abs(v) < 1e-12);
    CHECK_THROWS_AS(CoarseStabOperator(TensorSpace({SplineSpace1D::make(0, 1, 4, 1, Topology::open)})), DomainError);
}

TEST_CASE("linear stabilization matches the dense composite operator")
{
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto topo : {Topology::open, Topology::periodic}) {
        const int ne = topo == Topology::open ? 9 : 12;
        const auto fine = SplineSpace1D::make(0, 1, ne, 3, topo);
        const auto coarse = fine.lowered();
        const int n = fine.size();
        const int nc = coarse.size();
        CHECK(n == 12);
        const auto gf = fine.greville();
        const auto gc = coarse.greville();
        const auto mf = point_matrix(fine, gf, 0);
        const auto d1 = point_matrix(fine, gf, 1);
        const auto d2 = point_matrix(fine, gf, 2);
        const auto p = point_matrix(fine, gc, 0);
        const auto mc = point_matrix(coarse, gc, 0);
        const auto dc = point_matrix(coarse, gf, 1);
        std::vector<double> c(n);
        for (auto& v : c) v = unif(rng);
        auto ghat = dense_solve(mf, mul(d1, n, n, c), n);
        auto pi = dense_solve(mc, mul(p, nc, n, ghat), nc);
        const auto div = mul(dc, n, nc, pi);
        const auto lap = mul(d2, n, n, c);
        CoarseStabOperator op(TensorSpace({fine}));
        std::vector<double> out;
        op.apply(c, out);
        double scale = 0.0;
        for (double v : lap) scale = std::max(scale, std::abs(v));
        for (int i = 0; i < n; ++i) CHECK(std::abs(out[i] - (lap[i] - div[i])) < 1e-10 * scale);
    }
}

TEST_CASE("global normalization and mode selection")
{
    const std::vector<double> v{0.0, 1.0, 2.0, 5.0};
    CHECK(global_normalization(v) == doctest::Approx(3.0));  // mean 2
    CHECK(global_normalization(std::vector<double>{}) == 0.0);
    CHECK(parse_normalization("stencil") == NormalizationMode::stencil);
    CHECK(to_string(parse_normalization("global")) == "global");
    CHECK_THROWS_AS(parse_normalization("local"), DomainError);

    // one residual spike: global mode scales with the domain-wide spread,
    // stencil mode with the local one
    GridTopology g;
    g.shape = Shape{1, {9, 1, 1}};
    g.periodic = {true, false, false};
    std::vector<double> vals(9);
    for (int i = 0; i < 9; ++i) vals[i] = std::sin(2 * 3.141592653589793 * i / 9.0);
    std::vector<double> res(9, 0.0);
    res[3] = 1.0;
    std::vector<double> h(9, 1.0 / 9), c(9, 1.0);
    ViscosityInputs in;
    in.grid = g;
    in.centroid_shape = Shape{1, {9, 1, 1}};
    in.h = h;
    in.wavespeed = c;
    in.residual.emplace_back(res);
    in.values.emplace_back(vals);
    StabConstants k{4.0, 100.0, 0.25, 0.0};
    ViscosityOptions opt;
    const auto a = compute_viscosity(in, k, opt);
    const double m = global_normalization(vals);
    CHECK(a.nu_rb[3] == doctest::Approx(4.0 * h[3] * h[3] / m));
    opt.normalization = NormalizationMode::stencil;
    const auto b = compute_viscosity(in, k, opt);
    const auto mloc = normalization(g, vals);
    CHECK(b.nu_rb[3] == doctest::Approx(4.0 * h[3] * h[3] / mloc[3]));
}
