#include "igc/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace igc {

HistoryBuffer::HistoryBuffer(int capacity) : capacity_(capacity)
{
    if (capacity < 1) throw DomainError("history capacity must be positive");
}

void HistoryBuffer::push(double t, std::vector<FieldCoeffs> snapshot)
{
    if (!entries_.empty() && !(t > entries_.front().t)) {
        throw DomainError("history times must increase strictly");
    }
    entries_.push_front(Entry{t, std::move(snapshot)});
    while (int(entries_.size()) > capacity_) entries_.pop_back();
}

int HistoryBuffer::order() const
{
    return std::clamp(size() - 1, 0, 4);
}

FieldCoeffs HistoryBuffer::time_derivative(int comp) const
{
    if (entries_.empty()) throw DomainError("time derivative requested from an empty history");
    const auto& newest = entries_.front().fields.at(comp);
    FieldCoeffs out(newest.shape, 0.0);
    const int q = order();
    if (q == 0) return out;
    std::vector<double> times(q + 1);
    for (int j = 0; j <= q; ++j) times[j] = entries_[j].t;
    const auto w = bdf_weights(times);
    for (int j = 0; j <= q; ++j) {
        const auto& v = entries_[j].fields.at(comp).values;
        for (std::size_t i = 0; i < v.size(); ++i) out.values[i] += w[j] * v[i];
    }
    return out;
}

std::vector<double> bdf_weights(std::span<const double> times)
{
    const int n = int(times.size());
    std::vector<double> w(n, 0.0);
    if (n < 2) return w;
    const double t0 = times[0];
    for (int m = 1; m < n; ++m) w[0] += 1.0 / (t0 - times[m]);
    for (int j = 1; j < n; ++j) {
        double num = 1.0;
        double den = 1.0;
        for (int m = 0; m < n; ++m) {
            if (m == j) continue;
            den *= times[j] - times[m];
            if (m != 0) num *= t0 - times[m];
        }
        w[j] = num / den;
    }
    return w;
}

namespace {

enum class Reduce { max, min, sum };

// Input indices feeding output position r along one axis.
using Neighbors = std::vector<std::vector<int>>;

Neighbors box_neighbors(int n, int half, bool periodic)
{
    Neighbors nb(n);
    for (int i = 0; i < n; ++i) {
        if (periodic && 2 * half + 1 >= n) {
            for (int j = 0; j < n; ++j) nb[i].push_back(j);
        } else if (periodic) {
            for (int o = -half; o <= half; ++o) nb[i].push_back(((i + o) % n + n) % n);
        } else {
            for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) nb[i].push_back(j);
        }
    }
    return nb;
}

// Centroid c sits between points c and c+1 (mod n when periodic).
Neighbors centroid_neighbors(int n, bool periodic)
{
    Neighbors nb(n);
    const int nc = periodic ? n : n - 1;
    for (int i = 0; i < n; ++i) {
        if (periodic) {
            nb[i].push_back((i - 1 + n) % n);
            if (n > 1) nb[i].push_back(i);
        } else {
            if (i - 1 >= 0) nb[i].push_back(i - 1);
            if (i < nc) nb[i].push_back(i);
        }
    }
    return nb;
}

// Applies the reduction along one axis: output shape has n[axis] = nb.size().
void reduce_axis(const Shape& in_shape, int axis, const Neighbors& nb, Reduce op, std::span<const double> in,
                 std::vector<double>& out, Shape& out_shape)
{
    out_shape = in_shape;
    out_shape.n[axis] = int(nb.size());
    out.assign(out_shape.size(), 0.0);
    std::size_t inner = 1;
    for (int d = 0; d < axis; ++d) inner *= std::size_t(in_shape.n[d]);
    std::size_t outer = 1;
    for (int d = axis + 1; d < 3; ++d) outer *= std::size_t(in_shape.n[d]);
    const std::size_t nin = std::size_t(in_shape.n[axis]);
    const std::size_t nout = nb.size();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < nout; ++r) {
            double* dst = out.data() + (o * nout + r) * inner;
            for (std::size_t t = 0; t < inner; ++t) {
                double acc = op == Reduce::max   ? -std::numeric_limits<double>::infinity()
                             : op == Reduce::min ? std::numeric_limits<double>::infinity()
                                                 : 0.0;
                for (int j : nb[r]) {
                    const double v = in[(o * nin + std::size_t(j)) * inner + t];
                    if (op == Reduce::max) acc = std::max(acc, v);
                    else if (op == Reduce::min) acc = std::min(acc, v);
                    else acc += v;
                }
                dst[t] = acc;
            }
        }
    }
}

std::vector<double> reduce_box(Shape shape, const std::array<Neighbors, 3>& nb, int dim, Reduce op,
                               std::span<const double> values)
{
    std::vector<double> cur(values.begin(), values.end());
    std::vector<double> next;
    for (int d = 0; d < dim; ++d) {
        Shape out_shape;
        reduce_axis(shape, d, nb[d], op, cur, next, out_shape);
        cur.swap(next);
        shape = out_shape;
    }
    return cur;
}

}  // namespace

std::vector<double> local_residual_max(const GridTopology& grid, std::span<const double> centroid_values)
{
    const int dim = grid.shape.dim;
    Shape cshape = grid.shape;
    std::array<Neighbors, 3> nb;
    for (int d = 0; d < dim; ++d) {
        const int n = grid.shape.n[d];
        cshape.n[d] = grid.periodic[d] ? n : n - 1;
        nb[d] = centroid_neighbors(n, grid.periodic[d]);
    }
    if (centroid_values.size() != cshape.size()) throw DomainError("local_residual_max: centroid count mismatch");
    std::vector<double> abs_vals(centroid_values.size());
    for (std::size_t i = 0; i < abs_vals.size(); ++i) abs_vals[i] = std::abs(centroid_values[i]);
    return reduce_box(cshape, nb, dim, Reduce::max, abs_vals);
}

std::vector<double> stencil_max(const GridTopology& grid, std::span<const double> values, int half_width)
{
    if (values.size() != grid.shape.size()) throw DomainError("stencil_max: value count mismatch");
    std::array<Neighbors, 3> nb;
    for (int d = 0; d < grid.shape.dim; ++d) nb[d] = box_neighbors(grid.shape.n[d], half_width, grid.periodic[d]);
    return reduce_box(grid.shape, nb, grid.shape.dim, Reduce::max, values);
}

std::vector<double> normalization(const GridTopology& grid, std::span<const double> values)
{
    if (values.size() != grid.shape.size()) throw DomainError("normalization: value count mismatch");
    const int dim = grid.shape.dim;
    std::array<Neighbors, 3> nb;
    for (int d = 0; d < dim; ++d) nb[d] = box_neighbors(grid.shape.n[d], 1, grid.periodic[d]);
    const auto hi = reduce_box(grid.shape, nb, dim, Reduce::max, values);
    const auto lo = reduce_box(grid.shape, nb, dim, Reduce::min, values);
    const auto sum = reduce_box(grid.shape, nb, dim, Reduce::sum, values);
    std::vector<double> m(values.size());
    const Shape& s = grid.shape;
    for (int l = 0; l < s.n[2]; ++l) {
        for (int j = 0; j < s.n[1]; ++j) {
            for (int i = 0; i < s.n[0]; ++i) {
                std::size_t count = nb[0][i].size();
                if (dim > 1) count *= nb[1][j].size();
                if (dim > 2) count *= nb[2][l].size();
                const auto p = s.index(i, j, l);
                const double mean = sum[p] / double(count);
                m[p] = (hi[p] - lo[p]) - std::abs(values[p] - mean);
            }
        }
    }
    return m;
}

double global_normalization(std::span<const double> values)
{
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(values.size());
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v - mean));
    return m;
}

std::string to_string(NormalizationMode m)
{
    return m == NormalizationMode::global ? "global" : "stencil";
}

NormalizationMode parse_normalization(const std::string& s)
{
    if (s == "global") return NormalizationMode::global;
    if (s == "stencil") return NormalizationMode::stencil;
    throw DomainError("unknown normalization '" + s + "' (expected global or stencil)");
}

double normalization_floor(std::span<const double> values)
{
    if (values.empty()) return 1e-14;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return std::max(1e-12 * (*hi - *lo), 1e-14);
}

double residual_viscosity(double c_rb, double h, double r_tilde, double m, double m_floor)
{
    return c_rb * h * h * r_tilde / std::max(m, m_floor);
}

double first_order_viscosity(double c_max, double h, double wavespeed)
{
    return c_max * h * wavespeed;
}

double artificial_viscosity(double nu_rb, double nu_fo)
{
    return std::min(nu_rb, nu_fo);
}

double gp_kappa(double mu, double prandtl, double c_rb)
{
    return prandtl / c_rb * mu;
}

double ViscosityState::max_nu() const
{
    double m = 0.0;
    for (double v : nu_art) m = std::max(m, v);
    return m;
}

ViscosityState compute_viscosity(const ViscosityInputs& in, const StabConstants& k, const ViscosityOptions& opt)
{
    const std::size_t n = in.grid.shape.size();
    if (in.h.size() != n || in.wavespeed.size() != n) throw DomainError("compute_viscosity: point count mismatch");
    ViscosityState st;
    st.frozen = true;
    const auto c = stencil_max(in.grid, in.wavespeed, opt.wavespeed_half_width);
    st.nu_fo.resize(n);
    st.nu_lin.assign(n, 0.0);
    st.nu_rb.assign(n, 0.0);
    st.nu_art.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        st.nu_fo[i] = first_order_viscosity(k.c_max, in.h[i], c[i]);
        if (opt.linear) st.nu_lin[i] = k.c_lin * in.h[i] * c[i];
    }
    const bool active = opt.nonlinear && !in.residual.empty();
    if (active) {
        if (in.residual.size() != in.values.size()) throw DomainError("compute_viscosity: equation count mismatch");
        for (std::size_t e = 0; e < in.residual.size(); ++e) {
            const auto r = local_residual_max(in.grid, in.residual[e]);
            const double floor = normalization_floor(in.values[e]);
            std::vector<double> m;
            if (opt.normalization == NormalizationMode::stencil) {
                m = normalization(in.grid, in.values[e]);
            } else {
                m.assign(n, global_normalization(in.values[e]));
            }
            for (std::size_t i = 0; i < n; ++i) {
                st.nu_rb[i] = std::max(st.nu_rb[i], residual_viscosity(k.c_rb, in.h[i], r[i], m[i], floor));
            }
        }
        for (std::size_t i = 0; i < n; ++i) st.nu_art[i] = artificial_viscosity(st.nu_rb[i], st.nu_fo[i]);
    }
    if (opt.mode == ViscosityMode::euler_gp) {
        st.kappa.resize(n);
        for (std::size_t i = 0; i < n; ++i) st.kappa[i] = gp_kappa(st.nu_art[i], k.prandtl, k.c_rb);
    }
    return st;
}

CoarseStabOperator::CoarseStabOperator(const TensorSpace& space) : dim_(space.dim())
{
    for (int d = 0; d < dim_; ++d) {
        if (space.space(d).degree() < 2) throw DomainError("linear stabilization needs degree >= 2");
    }
    const TensorSpace coarse = space.lowered();
    fine_ops_ = GridOperators::at_greville(space, 2);
    std::array<std::vector<double>, 3> coarse_pts;
    std::array<std::vector<double>, 3> fine_pts;
    for (int d = 0; d < dim_; ++d) {
        coarse_pts[d] = coarse.greville(d);
        fine_pts[d] = space.greville(d);
    }
    to_coarse_ = GridOperators(space, coarse_pts, 0);
    coarse_to_fine_ = GridOperators(coarse, fine_pts, 1);
    fine_mass_ = TensorMassSolver(space);
    coarse_mass_ = TensorMassSolver(coarse);
}

void CoarseStabOperator::apply(std::span<const double> coeffs, std::vector<double>& out) const
{
    thread_local std::vector<double> grad;
    thread_local std::vector<double> coarse_vals;
    thread_local std::vector<double> term;
    thread_local std::vector<double> scratch;
    const std::size_t n = fine_ops_.grid_shape().size();
    out.assign(n, 0.0);
    for (int d = 0; d < dim_; ++d) {
        std::array<int, 3> first{0, 0, 0};
        first[d] = 1;
        std::array<int, 3> second{0, 0, 0};
        second[d] = 2;
        fine_ops_.eval(coeffs, second, term, scratch);
        for (std::size_t i = 0; i < n; ++i) out[i] += term[i];

        fine_ops_.eval(coeffs, first, grad, scratch);
        fine_mass_.solve_in_place(grad);
        to_coarse_.eval(grad, {0, 0, 0}, coarse_vals, scratch);
        coarse_mass_.solve_in_place(coarse_vals);
        coarse_to_fine_.eval(coarse_vals, first, term, scratch);
        for (std::size_t i = 0; i < n; ++i) out[i] -= term[i];
    }
}

}  // namespace igc
