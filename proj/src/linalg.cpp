#include "igc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace igc {

namespace {

constexpr std::size_t kParallelThreshold = 4096;

struct AxisLayout {
    std::size_t inner = 1;
    std::size_t outer = 1;
    int n = 1;
};

AxisLayout layout(const Shape& s, int axis)
{
    AxisLayout l;
    for (int d = 0; d < axis; ++d) l.inner *= std::size_t(s.n[d]);
    for (int d = axis + 1; d < 3; ++d) l.outer *= std::size_t(s.n[d]);
    l.n = s.n[axis];
    return l;
}

}  // namespace

double LineOperator::at(int r, int c) const
{
    double v = 0.0;
    for (int l = 0; l < width; ++l) {
        const auto k = std::size_t(r) * width + l;
        if (col[k] == c) v += weight[k];
    }
    return v;
}

std::vector<double> LineOperator::to_dense() const
{
    std::vector<double> dense(std::size_t(rows) * cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int l = 0; l < width; ++l) {
            const auto k = std::size_t(r) * width + l;
            dense[std::size_t(r) * cols + col[k]] += weight[k];
        }
    }
    return dense;
}

LineOperator basis_operator(const SplineSpace1D& space, std::span<const double> points, int deriv)
{
    LineOperator op;
    op.rows = int(points.size());
    op.cols = space.size();
    op.width = space.degree() + 1;
    op.col.resize(std::size_t(op.rows) * op.width);
    op.weight.resize(op.col.size());
    BasisValues bv;
    for (int r = 0; r < op.rows; ++r) {
        space.eval_into(points[r], deriv, bv);
        for (int l = 0; l < op.width; ++l) {
            op.col[std::size_t(r) * op.width + l] = bv.index(l);
            op.weight[std::size_t(r) * op.width + l] = bv(deriv, l);
        }
    }
    return op;
}

LineOperator collocation_matrix(const SplineSpace1D& space)
{
    const auto g = space.greville();
    return basis_operator(space, g, 0);
}

// ---------------------------------------------------------------------------
// Band LU

bool BandedFactor::band_lu(Band& band, double tol)
{
    const int n = band.n;
    band.ipiv.resize(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        if (band.pivoted) {
            double best = std::abs(band.at(k, k));
            for (int i = k + 1; i <= std::min(n - 1, k + band.kl); ++i) {
                if (std::abs(band.at(i, k)) > best) {
                    best = std::abs(band.at(i, k));
                    p = i;
                }
            }
        }
        band.ipiv[k] = p;
        if (!(std::abs(band.at(p, k)) > tol)) return false;
        const int jmax = std::min(n - 1, k + band.ku_stored);
        if (p != k) {
            for (int j = k; j <= jmax; ++j) std::swap(band.at(k, j), band.at(p, j));
        }
        const double inv = 1.0 / band.at(k, k);
        for (int i = k + 1; i <= std::min(n - 1, k + band.kl); ++i) {
            const double l = band.at(i, k) * inv;
            band.at(i, k) = l;
            if (l == 0.0) continue;
            for (int j = k + 1; j <= jmax; ++j) band.at(i, j) -= l * band.at(k, j);
        }
    }
    return true;
}

void BandedFactor::Band::solve_block(double* b, int count) const
{
    const auto c = std::size_t(count);
    for (int k = 0; k < n; ++k) {
        if (pivoted && ipiv[k] != k) {
            std::swap_ranges(b + k * c, b + (k + 1) * c, b + std::size_t(ipiv[k]) * c);
        }
        const double* bk = b + k * c;
        for (int i = k + 1; i <= std::min(n - 1, k + kl); ++i) {
            const double l = at(i, k);
            if (l == 0.0) continue;
            double* bi = b + i * c;
            for (std::size_t r = 0; r < c; ++r) bi[r] -= l * bk[r];
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        double* bk = b + k * c;
        for (int j = k + 1; j <= std::min(n - 1, k + ku_stored); ++j) {
            const double u = at(k, j);
            if (u == 0.0) continue;
            const double* bj = b + j * c;
            for (std::size_t r = 0; r < c; ++r) bk[r] -= u * bj[r];
        }
        const double inv = 1.0 / at(k, k);
        for (std::size_t r = 0; r < c; ++r) bk[r] *= inv;
    }
}

bool BandedFactor::dense_lu(Dense& dense, double tol)
{
    const int n = dense.n;
    auto& a = dense.lu;
    dense.ipiv.resize(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i) {
            if (std::abs(a[std::size_t(i) * n + k]) > std::abs(a[std::size_t(p) * n + k])) p = i;
        }
        dense.ipiv[k] = p;
        if (!(std::abs(a[std::size_t(p) * n + k]) > tol)) return false;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(a[std::size_t(k) * n + j], a[std::size_t(p) * n + j]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double l = a[std::size_t(i) * n + k] / a[std::size_t(k) * n + k];
            a[std::size_t(i) * n + k] = l;
            for (int j = k + 1; j < n; ++j) a[std::size_t(i) * n + j] -= l * a[std::size_t(k) * n + j];
        }
    }
    return true;
}

void BandedFactor::Dense::solve_block(double* b, int count) const
{
    const auto c = std::size_t(count);
    for (int k = 0; k < n; ++k) {
        if (ipiv[k] != k) std::swap_ranges(b + k * c, b + (k + 1) * c, b + std::size_t(ipiv[k]) * c);
        for (int i = k + 1; i < n; ++i) {
            const double l = lu[std::size_t(i) * n + k];
            for (std::size_t r = 0; r < c; ++r) b[i * c + r] -= l * b[k * c + r];
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        for (int j = k + 1; j < n; ++j) {
            const double u = lu[std::size_t(k) * n + j];
            for (std::size_t r = 0; r < c; ++r) b[k * c + r] -= u * b[j * c + r];
        }
        const double inv = 1.0 / lu[std::size_t(k) * n + k];
        for (std::size_t r = 0; r < c; ++r) b[k * c + r] *= inv;
    }
}

double BandedFactor::pivot_ratio() const
{
    return pivot_min_ > 0.0 ? pivot_max_ / pivot_min_ : std::numeric_limits<double>::infinity();
}

BandedFactor factorize(const LineOperator& m, const std::string& label)
{
    if (m.rows != m.cols) throw SingularInterpolation(label + ": collocation matrix is not square");
    const int n = m.rows;
    BandedFactor f;
    f.n_ = n;
    double maxabs = 0.0;
    for (double w : m.weight) maxabs = std::max(maxabs, std::abs(w));
    const double tol = 1e-12 * maxabs;
    const auto singular = [&] {
        return SingularInterpolation(label + ": collocation matrix is numerically singular (n = " +
                                     std::to_string(n) + ")");
    };
    if (maxabs == 0.0) throw singular();

    auto record_pivots = [&f](auto diag) {
        f.pivot_min_ = std::numeric_limits<double>::infinity();
        f.pivot_max_ = 0.0;
        for (int k = 0; k < f.n_; ++k) {
            const double v = std::abs(diag(k));
            f.pivot_min_ = std::min(f.pivot_min_, v);
            f.pivot_max_ = std::max(f.pivot_max_, v);
        }
    };

    auto go_dense = [&] {
        f.kind_ = BandedFactor::Kind::dense;
        f.dense_.n = n;
        f.dense_.lu = m.to_dense();
        if (!BandedFactor::dense_lu(f.dense_, tol)) throw singular();
        record_pivots([&](int k) { return f.dense_.lu[std::size_t(k) * n + k]; });
        return f;
    };

    if (n <= 4 * m.width) return go_dense();

    // Split into banded core and cyclic corner entries.
    int kl = 0;
    int ku = 0;
    bool cyclic = false;
    for (int r = 0; r < n; ++r) {
        for (int l = 0; l < m.width; ++l) {
            const auto k = std::size_t(r) * m.width + l;
            if (m.weight[k] == 0.0) continue;
            const int off = m.col[k] - r;
            if (std::abs(off) > n / 2) {
                cyclic = true;
                continue;
            }
            kl = std::max(kl, -off);
            ku = std::max(ku, off);
        }
    }

    auto build_core = [&](bool pivoted) {
        BandedFactor::Band band;
        band.n = n;
        band.kl = kl;
        band.ku_stored = pivoted ? kl + ku : ku;
        band.pivoted = pivoted;
        band.a.assign(std::size_t(n) * band.width(), 0.0);
        for (int r = 0; r < n; ++r) {
            for (int l = 0; l < m.width; ++l) {
                const auto k = std::size_t(r) * m.width + l;
                const int off = m.col[k] - r;
                if (std::abs(off) > n / 2) continue;
                band.at(r, m.col[k]) += m.weight[k];
            }
        }
        return band;
    };

    f.core_ = build_core(false);
    if (!BandedFactor::band_lu(f.core_, tol)) {
        f.core_ = build_core(true);
        if (!BandedFactor::band_lu(f.core_, tol)) {
            if (cyclic) return go_dense();
            throw singular();
        }
    }
    record_pivots([&](int k) { return f.core_.at(k, k); });
    f.kind_ = f.core_.pivoted ? BandedFactor::Kind::banded_pivoted : BandedFactor::Kind::banded;
    if (!cyclic) return f;

    // Woodbury: A = B + U V^T with V selecting the corner columns.
    f.kind_ = BandedFactor::Kind::cyclic;
    std::vector<int> cols;
    for (int r = 0; r < n; ++r) {
        for (int l = 0; l < m.width; ++l) {
            const auto k = std::size_t(r) * m.width + l;
            if (m.weight[k] != 0.0 && std::abs(m.col[k] - r) > n / 2) cols.push_back(m.col[k]);
        }
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    const int rank = int(cols.size());
    f.corner_cols_ = cols;
    f.z_.assign(std::size_t(n) * rank, 0.0);
    for (int r = 0; r < n; ++r) {
        for (int l = 0; l < m.width; ++l) {
            const auto k = std::size_t(r) * m.width + l;
            if (std::abs(m.col[k] - r) <= n / 2) continue;
            const int q = int(std::lower_bound(cols.begin(), cols.end(), m.col[k]) - cols.begin());
            f.z_[std::size_t(r) * rank + q] += m.weight[k];
        }
    }
    f.core_.solve_block(f.z_.data(), rank);
    f.capacitance_.n = rank;
    f.capacitance_.lu.assign(std::size_t(rank) * rank, 0.0);
    for (int p = 0; p < rank; ++p) {
        for (int q = 0; q < rank; ++q) {
            f.capacitance_.lu[std::size_t(p) * rank + q] =
                (p == q ? 1.0 : 0.0) + f.z_[std::size_t(cols[p]) * rank + q];
        }
    }
    if (!BandedFactor::dense_lu(f.capacitance_, 1e-14)) return go_dense();
    return f;
}

void BandedFactor::solve(std::span<double> b) const
{
    solve_block(b.data(), 1);
}

void BandedFactor::solve_block(double* b, int count) const
{
    switch (kind_) {
    case Kind::dense:
        dense_.solve_block(b, count);
        return;
    case Kind::banded:
    case Kind::banded_pivoted:
        core_.solve_block(b, count);
        return;
    case Kind::cyclic:
        break;
    }
    core_.solve_block(b, count);
    const int rank = int(corner_cols_.size());
    const auto c = std::size_t(count);
    thread_local std::vector<double> s;
    s.resize(std::size_t(rank) * c);
    for (int q = 0; q < rank; ++q) {
        std::copy_n(b + std::size_t(corner_cols_[q]) * c, c, s.begin() + q * c);
    }
    capacitance_.solve_block(s.data(), count);
    for (int i = 0; i < n_; ++i) {
        double* bi = b + std::size_t(i) * c;
        for (int q = 0; q < rank; ++q) {
            const double z = z_[std::size_t(i) * rank + q];
            if (z == 0.0) continue;
            const double* sq = s.data() + q * c;
            for (std::size_t r = 0; r < c; ++r) bi[r] -= z * sq[r];
        }
    }
}

// ---------------------------------------------------------------------------
// Tensor application

void apply_axis(const LineOperator& op, int axis, const Shape& in_shape, std::span<const double> in,
                std::span<double> out)
{
    const auto lay = layout(in_shape, axis);
    if (lay.n != op.cols) throw DomainError("apply_axis: operator/array shape mismatch");
    const std::size_t inner = lay.inner;
    const std::size_t nin = std::size_t(lay.n);
    const std::size_t nout = std::size_t(op.rows);
    const int width = op.width;
    const long long outer = (long long)lay.outer;
    const bool big = in.size() >= kParallelThreshold;

    if (inner == 1) {
#pragma omp parallel for if (big && outer > 1)
        for (long long o = 0; o < outer; ++o) {
            const double* src = in.data() + std::size_t(o) * nin;
            double* dst = out.data() + std::size_t(o) * nout;
            for (std::size_t r = 0; r < nout; ++r) {
                const int* c = op.col.data() + r * width;
                const double* w = op.weight.data() + r * width;
                double sum = 0.0;
                for (int l = 0; l < width; ++l) sum += w[l] * src[c[l]];
                dst[r] = sum;
            }
        }
        return;
    }
#pragma omp parallel for collapse(2) if (big)
    for (long long o = 0; o < outer; ++o) {
        for (long long rr = 0; rr < (long long)nout; ++rr) {
            const auto r = std::size_t(rr);
            double* dst = out.data() + (std::size_t(o) * nout + r) * inner;
            std::fill_n(dst, inner, 0.0);
            for (int l = 0; l < width; ++l) {
                const double w = op.weight[r * width + l];
                const double* src = in.data() + (std::size_t(o) * nin + std::size_t(op.col[r * width + l])) * inner;
                for (std::size_t t = 0; t < inner; ++t) dst[t] += w * src[t];
            }
        }
    }
}

Shape TensorOperator::output_shape(const Shape& in) const
{
    Shape s = in;
    for (int d = 0; d < 3; ++d) {
        if (ops[d]) s.n[d] = ops[d]->rows;
    }
    return s;
}

void TensorOperator::apply(const Shape& in_shape, std::span<const double> in, std::vector<double>& out,
                           std::vector<double>& scratch) const
{
    int count = 0;
    for (auto* op : ops) count += op ? 1 : 0;
    if (count == 0) {
        out.assign(in.begin(), in.end());
        return;
    }
    // Alternate buffers so the last pass lands in `out`.
    std::vector<double>* target = (count % 2 == 1) ? &out : &scratch;
    std::vector<double>* other = (count % 2 == 1) ? &scratch : &out;
    std::span<const double> src = in;
    Shape s = in_shape;
    for (int d = 0; d < 3; ++d) {
        if (!ops[d]) continue;
        Shape next = s;
        next.n[d] = ops[d]->rows;
        target->resize(next.size());
        apply_axis(*ops[d], d, s, src, *target);
        src = *target;
        s = next;
        std::swap(target, other);
    }
}

GridOperators::GridOperators(const TensorSpace& space, const std::array<std::vector<double>, 3>& points,
                             int max_deriv)
    : dim_(space.dim()), max_deriv_(max_deriv), coeff_shape_(space.shape())
{
    if (max_deriv < 0 || max_deriv > 2) throw DomainError("GridOperators: derivative order must be 0..2");
    grid_shape_.dim = dim_;
    for (int d = 0; d < dim_; ++d) {
        grid_shape_.n[d] = int(points[d].size());
        const int top = std::min(max_deriv, space.space(d).degree());
        for (int k = 0; k <= top; ++k) ops_[d][k] = basis_operator(space.space(d), points[d], k);
    }
}

GridOperators GridOperators::at_greville(const TensorSpace& space, int max_deriv)
{
    std::array<std::vector<double>, 3> pts;
    for (int d = 0; d < space.dim(); ++d) pts[d] = space.greville(d);
    return GridOperators(space, pts, max_deriv);
}

void GridOperators::eval(std::span<const double> coeffs, std::array<int, 3> orders, std::vector<double>& out,
                         std::vector<double>& scratch) const
{
    if (coeffs.size() != coeff_shape_.size()) throw DomainError("GridOperators::eval: coefficient count mismatch");
    TensorOperator t;
    for (int d = 0; d < dim_; ++d) {
        const int k = orders[d];
        if (k < 0 || k > max_deriv_ || ops_[d][k].rows == 0) {
            throw DomainError("GridOperators::eval: derivative order " + std::to_string(k) + " not prepared");
        }
        t.ops[d] = &ops_[d][k];
    }
    t.apply(coeff_shape_, coeffs, out, scratch);
}

TensorMassSolver::TensorMassSolver(const TensorSpace& space) : shape_(space.shape())
{
    for (int d = 0; d < space.dim(); ++d) {
        const auto& s = space.space(d);
        factors_.push_back(factorize(collocation_matrix(s),
                                     "direction " + std::to_string(d) + " (" + to_string(s.topology()) +
                                         ", degree " + std::to_string(s.degree()) + ", " +
                                         std::to_string(s.elements()) + " elements)"));
    }
}

void TensorMassSolver::solve_in_place(std::span<double> values) const
{
    if (values.size() != shape_.size()) throw DomainError("tensor mass solve: shape mismatch");
    const bool big = values.size() >= kParallelThreshold;
    // z, then y, then x.
    for (int axis = int(factors_.size()) - 1; axis >= 0; --axis) {
        const auto lay = layout(shape_, axis);
        const auto& f = factors_[axis];
        const long long outer = (long long)lay.outer;
        const std::size_t stride = std::size_t(lay.n) * lay.inner;
        if (lay.inner == 1) {
#pragma omp parallel for if (big)
            for (long long o = 0; o < outer; ++o) f.solve_block(values.data() + std::size_t(o) * stride, 1);
        } else {
#pragma omp parallel for if (big && outer > 1)
            for (long long o = 0; o < outer; ++o) {
                f.solve_block(values.data() + std::size_t(o) * stride, int(lay.inner));
            }
        }
    }
}

FieldCoeffs TensorMassSolver::solve(std::span<const double> values) const
{
    FieldCoeffs c;
    c.shape = shape_;
    c.values.assign(values.begin(), values.end());
    solve_in_place(c.values);
    return c;
}

FieldCoeffs fit_field(const TensorSpace& space, std::span<const double> samples)
{
    if (samples.size() != space.size()) throw DomainError("fit_field: sample count does not match grid");
    return TensorMassSolver(space).solve(samples);
}

}  // namespace igc
