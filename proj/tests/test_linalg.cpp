#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "igc/linalg.hpp"

using namespace igc;

namespace {

using Dense = std::vector<double>;

// Gaussian elimination with full row pivoting on a dense copy.
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

std::vector<double> dense_mul(const Dense& a, const std::vector<double>& x, int n)
{
    std::vector<double> y(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) y[i] += a[i * n + j] * x[j];
    }
    return y;
}

// Kronecker product with x fastest: (A_y (x) A_x)[(i + nx j), (i' + nx j')].
Dense kron_xy(const Dense& ax, int nx, const Dense& ay, int ny)
{
    const int n = nx * ny;
    Dense k(std::size_t(n) * n, 0.0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            for (int jj = 0; jj < ny; ++jj) {
                for (int ii = 0; ii < nx; ++ii) {
                    k[std::size_t(i + nx * j) * n + (ii + nx * jj)] = ax[i * nx + ii] * ay[j * ny + jj];
                }
            }
        }
    }
    return k;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Banded operator stored with a fixed row width (zeros kept out of the band).
LineOperator banded_operator(const Dense& a, int n, int kl, int ku)
{
    LineOperator op;
    op.rows = op.cols = n;
    op.width = kl + ku + 1;
    for (int i = 0; i < n; ++i) {
        for (int off = -kl; off <= ku; ++off) {
            const int j = std::clamp(i + off, 0, n - 1);
            const bool inside = (i + off >= 0 && i + off < n);
            op.col.push_back(j);
            op.weight.push_back(inside ? a[i * n + j] : 0.0);
        }
    }
    return op;
}

}  // namespace

TEST_CASE("collocation matrix examples")
{
    const auto lin = SplineSpace1D::make(0, 1, 6, 1, Topology::open);
    const auto id = collocation_matrix(lin).to_dense();
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) CHECK(id[i * 7 + j] == doctest::Approx(i == j ? 1.0 : 0.0));
    }

    const auto s = SplineSpace1D::from_open_knots({0, 0, 0, 0.5, 1, 1, 1}, 2);
    const auto m = collocation_matrix(s).to_dense();
    CHECK(s.greville()[1] == doctest::Approx(0.25));
    CHECK(m[1 * 4 + 0] == doctest::Approx(0.25));
    CHECK(m[1 * 4 + 1] == doctest::Approx(0.625));
    CHECK(m[1 * 4 + 2] == doctest::Approx(0.125));
    CHECK(m[1 * 4 + 3] == 0.0);

    for (auto topo : {Topology::open, Topology::periodic}) {
        for (int k = 1; k <= 7; ++k) {
            const auto sp = SplineSpace1D::make(0, 1, 13, k, topo);
            const auto op = collocation_matrix(sp);
            const int n = sp.size();
            const auto d = op.to_dense();
            for (int i = 0; i < n; ++i) {
                double sum = 0.0;
                for (int j = 0; j < n; ++j) sum += d[i * n + j];
                CHECK(std::abs(sum - 1.0) < 1e-14);
            }
        }
    }
}

TEST_CASE("factorize identity")
{
    const auto lin = SplineSpace1D::make(0, 1, 30, 1, Topology::open);
    const auto f = factorize(collocation_matrix(lin));
    CHECK(f.kind() == BandedFactor::Kind::banded);
    CHECK(f.lower_bandwidth() == 0);
    CHECK(f.upper_bandwidth() == 0);
    std::vector<double> b(31);
    for (int i = 0; i < 31; ++i) b[i] = i * 0.5 - 3.0;
    auto x = b;
    f.solve(x);
    for (int i = 0; i < 31; ++i) CHECK(x[i] == b[i]);
}

TEST_CASE("random diagonally dominant band vs dense oracle")
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int n = 50;
    const int kl = 3;
    const int ku = 2;
    Dense a(n * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) a[i * n + j] = unif(rng);
        a[i * n + i] = 8.0 + unif(rng);
    }
    const auto f = factorize(banded_operator(a, n, kl, ku));
    CHECK(f.kind() == BandedFactor::Kind::banded);
    CHECK(f.lower_bandwidth() <= kl);
    CHECK(f.upper_bandwidth() <= ku);
    std::vector<double> b(n);
    for (auto& v : b) v = unif(rng);
    auto x = b;
    f.solve(x);
    const auto oracle = dense_solve(a, b, n);
    std::vector<double> diff(n);
    for (int i = 0; i < n; ++i) diff[i] = x[i] - oracle[i];
    CHECK(max_abs(diff) / max_abs(oracle) < 1e-10);
}

TEST_CASE("zero pivot switches to partial pivoting within 2k+1 band")
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    const int n = 40;
    const int kl = 2;
    const int ku = 2;
    Dense a(n * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) a[i * n + j] = unif(rng);
    }
    a[0] = 0.0;  // forces a row swap at the first step
    const auto f = factorize(banded_operator(a, n, kl, ku));
    CHECK(f.kind() == BandedFactor::Kind::banded_pivoted);
    CHECK(f.upper_bandwidth() <= kl + ku);
    std::vector<double> b(n);
    for (auto& v : b) v = unif(rng);
    auto x = b;
    f.solve(x);
    const auto ax = dense_mul(a, x, n);
    std::vector<double> diff(n);
    for (int i = 0; i < n; ++i) diff[i] = ax[i] - b[i];
    CHECK(max_abs(diff) / max_abs(b) < 1e-10);
}

TEST_CASE("singular matrix raises a named error")
{
    const int n = 30;
    Dense a(n * n, 0.0);
    for (int i = 0; i < n; ++i) a[i * n + i] = 1.0;
    for (int j = 0; j < n; ++j) a[5 * n + j] = 0.0;
    try {
        factorize(banded_operator(a, n, 1, 1), "test space");
        FAIL("expected SingularInterpolation");
    } catch (const SingularInterpolation& e) {
        CHECK(std::string(e.what()).find("test space") != std::string::npos);
    }
}

TEST_CASE("periodic collocation solve roundtrip")
{
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    SUBCASE("k=2, n=8")
    {
        const auto s = SplineSpace1D::make(0, 1, 8, 2, Topology::periodic);
        const auto op = collocation_matrix(s);
        const auto f = factorize(op);
        std::vector<double> v(8);
        for (auto& x : v) x = unif(rng);
        auto b = dense_mul(op.to_dense(), v, 8);
        f.solve(b);
        for (int i = 0; i < 8; ++i) CHECK(std::abs(b[i] - v[i]) < 1e-10);
    }
    for (int k = 1; k <= 7; ++k) {
        for (int ne : {9, 24, 64}) {
            const auto s = SplineSpace1D::make(0, 2, ne, k, Topology::periodic);
            const auto op = collocation_matrix(s);
            const auto f = factorize(op);
            if (k >= 2 && ne > 4 * (k + 1)) {
                CHECK(f.kind() == BandedFactor::Kind::cyclic);
                CHECK(f.lower_bandwidth() <= k + 1);
                CHECK(f.upper_bandwidth() <= k + 1);
            }
            std::vector<double> v(ne);
            for (auto& x : v) x = unif(rng);
            auto b = dense_mul(op.to_dense(), v, ne);
            const auto rhs = b;
            f.solve(b);
            const auto back = dense_mul(op.to_dense(), b, ne);
            std::vector<double> diff(ne);
            for (int i = 0; i < ne; ++i) diff[i] = back[i] - rhs[i];
            CHECK(max_abs(diff) / max_abs(rhs) < 1e-10);
        }
    }
}

TEST_CASE("open collocation factors keep the k+1 band")
{
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int k = 1; k <= 8; ++k) {
        const auto s = SplineSpace1D::make(0, 1, 40, k, Topology::open);
        const auto op = collocation_matrix(s);
        const auto f = factorize(op);
        CHECK(f.kind() == BandedFactor::Kind::banded);
        CHECK(f.lower_bandwidth() <= k + 1);
        CHECK(f.upper_bandwidth() <= k + 1);
        const int n = s.size();
        std::vector<double> b(n);
        for (auto& v : b) v = unif(rng);
        auto x = b;
        f.solve(x);
        const auto back = dense_mul(op.to_dense(), x, n);
        std::vector<double> diff(n);
        for (int i = 0; i < n; ++i) diff[i] = back[i] - b[i];
        CHECK(max_abs(diff) / max_abs(b) < 1e-10);
        CHECK(f.pivot_ratio() >= 1.0);
    }
}

TEST_CASE("tensor mass solve of ones returns ones")
{
    TensorSpace ts({SplineSpace1D::make(0, 1, 6, 3, Topology::open), SplineSpace1D::make(0, 1, 20, 4, Topology::periodic),
                    SplineSpace1D::make(0, 1, 3, 2, Topology::open)});
    TensorMassSolver solver(ts);
    std::vector<double> ones(ts.size(), 1.0);
    const auto c = solver.solve(ones);
    for (double v : c.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("2D tensor solve matches dense Kronecker oracle")
{
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto topo : {Topology::open, Topology::periodic}) {
        const auto sx = SplineSpace1D::make(0, 1, topo == Topology::open ? 5 : 8, 3, topo);
        const auto sy = SplineSpace1D::make(0, 1, topo == Topology::open ? 5 : 8, 3, topo);
        TensorSpace ts({sx, sy});
        const int nx = sx.size();
        const int ny = sy.size();
        const auto big = kron_xy(collocation_matrix(sx).to_dense(), nx, collocation_matrix(sy).to_dense(), ny);
        std::vector<double> values(ts.size());
        for (auto& v : values) v = unif(rng);
        const auto oracle = dense_solve(big, values, nx * ny);
        const auto c = TensorMassSolver(ts).solve(values);
        std::vector<double> diff(values.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = c.values[i] - oracle[i];
        CHECK(max_abs(diff) / max_abs(oracle) < 1e-9);
    }
}

TEST_CASE("Kronecker identity: solve equals Mx^-1 X My^-T")
{
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const auto sx = SplineSpace1D::make(0, 1, 9, 4, Topology::open);
    const auto sy = SplineSpace1D::make(0, 1, 12, 2, Topology::open);
    TensorSpace ts({sx, sy});
    const int nx = sx.size();
    const int ny = sy.size();
    std::vector<double> values(ts.size());
    for (auto& v : values) v = unif(rng);
    // X has rows indexed by x; solve each column with Mx, then each row with My.
    const auto mx = collocation_matrix(sx).to_dense();
    const auto my = collocation_matrix(sy).to_dense();
    std::vector<double> tmp(values.size());
    for (int j = 0; j < ny; ++j) {
        std::vector<double> col(nx);
        for (int i = 0; i < nx; ++i) col[i] = values[i + nx * j];
        col = dense_solve(mx, col, nx);
        for (int i = 0; i < nx; ++i) tmp[i + nx * j] = col[i];
    }
    std::vector<double> oracle(values.size());
    for (int i = 0; i < nx; ++i) {
        std::vector<double> row(ny);
        for (int j = 0; j < ny; ++j) row[j] = tmp[i + nx * j];
        row = dense_solve(my, row, ny);
        for (int j = 0; j < ny; ++j) oracle[i + nx * j] = row[j];
    }
    const auto c = TensorMassSolver(ts).solve(values);
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(c.values[i] - oracle[i]) < 1e-10);
}

TEST_CASE("3D tensor solve round trip")
{
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    TensorSpace ts({SplineSpace1D::make(0, 1, 5, 3, Topology::open), SplineSpace1D::make(0, 1, 14, 2, Topology::periodic),
                    SplineSpace1D::make(0, 1, 4, 4, Topology::open)});
    FieldCoeffs c(ts.shape());
    for (auto& v : c.values) v = unif(rng);
    // Multiply by M via per-axis collocation operators, then solve back.
    std::array<LineOperator, 3> m;
    TensorOperator op;
    for (int d = 0; d < 3; ++d) {
        m[d] = collocation_matrix(ts.space(d));
        op.ops[d] = &m[d];
    }
    std::vector<double> mv;
    std::vector<double> scratch;
    op.apply(ts.shape(), c.values, mv, scratch);
    TensorMassSolver(ts).solve_in_place(mv);
    for (std::size_t i = 0; i < mv.size(); ++i) CHECK(std::abs(mv[i] - c.values[i]) < 1e-10);
}

TEST_CASE("tensor interpolation reproduces x^a y^b off grid")
{
    const int k = 3;
    TensorSpace ts({SplineSpace1D::make(0, 1, 7, k, Topology::open), SplineSpace1D::make(-1, 1, 5, k, Topology::open)});
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int a = 0; a <= k; ++a) {
        for (int b = 0; b <= k; ++b) {
            std::vector<double> samples(ts.size());
            for (std::size_t p = 0; p < ts.size(); ++p) {
                const auto x = ts.point(p);
                samples[p] = std::pow(x[0], a) * std::pow(x[1], b);
            }
            const auto c = fit_field(ts, samples);
            for (int trial = 0; trial < 10; ++trial) {
                const std::vector<double> pt{unif(rng), -1 + 2 * unif(rng)};
                CHECK(std::abs(eval_field(ts, c, pt) - std::pow(pt[0], a) * std::pow(pt[1], b)) < 1e-10);
            }
        }
    }
}

TEST_CASE("1D polynomial reproduction up to degree k")
{
    for (int k = 1; k <= 7; ++k) {
        const auto s = SplineSpace1D::make(-1, 2, 11, k, Topology::open);
        TensorSpace ts({s});
        for (int p = 0; p <= k; ++p) {
            std::vector<double> samples;
            for (double x : s.greville()) samples.push_back(std::pow(x / 2.0, p));
            const auto c = fit_field(ts, samples);
            for (double x = -1.0; x <= 2.0; x += 0.0371) {
                const std::vector<double> pt{x};
                CHECK(std::abs(eval_field(ts, c, pt) - std::pow(x / 2.0, p)) < 1e-12);
            }
        }
    }
}

TEST_CASE("Greville interpolant of f(x)=x has unit slope")
{
    for (auto topo : {Topology::open}) {
        for (int k = 1; k <= 6; ++k) {
            const auto s = SplineSpace1D::make(0, 1, 9, k, topo);
            TensorSpace ts({s});
            const auto c = fit_field(ts, s.greville());
            const std::vector<int> d1{1};
            for (double x = 0.0; x <= 1.0; x += 0.05) {
                const std::vector<double> pt{x};
                CHECK(eval_field(ts, c, pt, d1) == doctest::Approx(1.0).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("fit_field examples")
{
    SUBCASE("constant")
    {
        TensorSpace ts({SplineSpace1D::make(0, 1, 6, 3, Topology::open), SplineSpace1D::make(0, 1, 6, 2, Topology::periodic)});
        const auto c = fit_field(ts, std::vector<double>(ts.size(), 3.5));
        for (double x : {0.0, 0.3, 0.99}) {
            for (double y : {0.1, 0.5}) {
                const std::vector<double> pt{x, y};
                CHECK(eval_field(ts, c, pt) == doctest::Approx(3.5).epsilon(1e-13));
            }
        }
    }
    SUBCASE("sin sin on 32^2, k=4")
    {
        const double pi = std::acos(-1.0);
        TensorSpace ts({SplineSpace1D::make(0, 1, 32, 4, Topology::open), SplineSpace1D::make(0, 1, 32, 4, Topology::open)});
        std::vector<double> samples(ts.size());
        for (std::size_t p = 0; p < ts.size(); ++p) {
            const auto x = ts.point(p);
            samples[p] = std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]);
        }
        const auto c = fit_field(ts, samples);
        std::mt19937 rng(31);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double err = 0.0;
        for (int t = 0; t < 400; ++t) {
            const std::vector<double> pt{unif(rng), unif(rng)};
            err = std::max(err, std::abs(eval_field(ts, c, pt) - std::sin(2 * pi * pt[0]) * std::sin(2 * pi * pt[1])));
        }
        CHECK(err < 1e-5);
        // Roundtrip at the Greville points.
        for (std::size_t p = 0; p < ts.size(); p += 7) {
            const auto x = ts.point(p);
            const std::vector<double> pt{x[0], x[1]};
            CHECK(std::abs(eval_field(ts, c, pt) - samples[p]) < 1e-10);
        }
    }
    SUBCASE("shape mismatch")
    {
        TensorSpace ts({SplineSpace1D::make(0, 1, 6, 3, Topology::open)});
        CHECK_THROWS_AS(fit_field(ts, std::vector<double>(3, 1.0)), DomainError);
        TensorMassSolver solver(ts);
        std::vector<double> wrong(4, 0.0);
        CHECK_THROWS_AS(solver.solve_in_place(wrong), DomainError);
    }
}

TEST_CASE("solve-multiply roundtrip on random right-hand sides")
{
    std::mt19937 rng(37);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto topo : {Topology::open, Topology::periodic}) {
        for (int k = 2; k <= 6; ++k) {
            TensorSpace ts({SplineSpace1D::make(0, 1, 17, k, topo), SplineSpace1D::make(0, 1, 21, k, topo)});
            std::vector<double> b(ts.size());
            for (auto& v : b) v = unif(rng);
            const auto c = TensorMassSolver(ts).solve(b);
            std::array<LineOperator, 2> m{collocation_matrix(ts.space(0)), collocation_matrix(ts.space(1))};
            TensorOperator op;
            op.ops[0] = &m[0];
            op.ops[1] = &m[1];
            std::vector<double> mb;
            std::vector<double> scratch;
            op.apply(ts.shape(), c.values, mb, scratch);
            std::vector<double> diff(b.size());
            for (std::size_t i = 0; i < b.size(); ++i) diff[i] = mb[i] - b[i];
            CHECK(max_abs(diff) / max_abs(b) < 1e-10);
        }
    }
}

TEST_CASE("2D tensor solve cost scales with the grid size")
{
    auto time_solve = [](int n) {
        TensorSpace ts({SplineSpace1D::make(0, 1, n, 3, Topology::periodic), SplineSpace1D::make(0, 1, n, 3, Topology::periodic)});
        TensorMassSolver solver(ts);
        std::vector<double> v(ts.size(), 1.0);
        double best = 1e300;
        for (int rep = 0; rep < 7; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            for (int it = 0; it < 5; ++it) solver.solve_in_place(v);
            const auto t1 = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        return best;
    };
    const double small = time_solve(128);
    const double large = time_solve(256);
    MESSAGE("tensor solve time ratio for doubled n: " << large / small);
    CHECK(large / small < 5.0);
}
