#include "igc/spline_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace igc {

std::string to_string(Topology t)
{
    return t == Topology::open ? "open" : "periodic";
}

int BasisValues::index(int local) const
{
    int j = first + local;
    if (periodic) {
        j %= n_basis;
        if (j < 0) j += n_basis;
    }
    return j;
}

SplineSpace1D SplineSpace1D::make(double a, double b, int n_elements, int degree, Topology topology)
{
    if (n_elements < 1) {
        throw DomainError("spline space needs at least one element, got " + std::to_string(n_elements));
    }
    if (degree < 1) {
        throw DomainError("spline degree must be >= 1, got " + std::to_string(degree));
    }
    if (!(b > a)) {
        throw DomainError("spline domain must satisfy a < b");
    }
    SplineSpace1D s;
    s.a_ = a;
    s.b_ = b;
    s.degree_ = degree;
    s.elements_ = n_elements;
    s.topology_ = topology;
    const double len = b - a;
    if (topology == Topology::open) {
        s.n_ = n_elements + degree;
        s.knots_.reserve(n_elements + 2 * degree + 1);
        for (int i = 0; i < degree; ++i) s.knots_.push_back(a);
        for (int j = 0; j <= n_elements; ++j) {
            s.knots_.push_back(j == n_elements ? b : a + len * j / n_elements);
        }
        for (int i = 0; i < degree; ++i) s.knots_.push_back(b);
    } else {
        s.n_ = n_elements;
        const int total = n_elements + 2 * degree + 1;
        s.knots_.reserve(total);
        for (int i = 0; i < total; ++i) {
            s.knots_.push_back(a + len * double(i - degree) / n_elements);
        }
    }
    return s;
}

SplineSpace1D SplineSpace1D::from_open_knots(std::vector<double> knots, int degree)
{
    if (degree < 0) throw DomainError("spline degree must be non-negative");
    const int total = int(knots.size());
    if (total < 2 * degree + 2) throw DomainError("knot vector too short for degree");
    if (!std::is_sorted(knots.begin(), knots.end())) throw DomainError("knot vector must be non-decreasing");
    for (int i = 1; i <= degree; ++i) {
        if (knots[i] != knots[0] || knots[total - 1 - i] != knots[total - 1]) {
            throw DomainError("open knot vector needs end multiplicity degree+1");
        }
    }
    const int elements = total - 2 * degree - 1;
    for (int i = degree; i < degree + elements; ++i) {
        if (!(knots[i + 1] > knots[i])) throw DomainError("repeated interior knots are not supported");
    }
    SplineSpace1D s;
    s.a_ = knots.front();
    s.b_ = knots.back();
    s.degree_ = degree;
    s.elements_ = elements;
    s.topology_ = Topology::open;
    s.n_ = total - degree - 1;
    s.knots_ = std::move(knots);
    return s;
}

SplineSpace1D SplineSpace1D::lowered() const
{
    return make(a_, b_, elements_, degree_ - 1, topology_);
}

int SplineSpace1D::find_span(double x) const
{
    const int first = degree_;
    const int last = degree_ + elements_ - 1;
    auto begin = knots_.begin() + first;
    auto end = knots_.begin() + last + 1;
    int s = int(std::upper_bound(begin, end, x) - knots_.begin()) - 1;
    return std::clamp(s, first, last);
}

double SplineSpace1D::normalize(double x) const
{
    const double len = b_ - a_;
    if (topology_ == Topology::periodic) {
        double y = std::fmod(x - a_, len);
        if (y < 0.0) y += len;
        y += a_;
        if (y >= b_) y = a_;
        return y;
    }
    const double tol = 1e-12 * len;
    if (x < a_ - tol || x > b_ + tol) {
        std::ostringstream msg;
        msg << "point " << x << " outside spline domain [" << a_ << ", " << b_ << "]";
        throw DomainError(msg.str());
    }
    return std::clamp(x, a_, b_);
}

BasisValues SplineSpace1D::eval(double x, int n_derivs) const
{
    BasisValues out;
    eval_into(x, n_derivs, out);
    return out;
}

void SplineSpace1D::eval_into(double x, int n_derivs, BasisValues& out) const
{
    const double u = normalize(x);
    eval_span(u, find_span(u), n_derivs, out);
}

BasisValues SplineSpace1D::eval_in_span(double x, int span, int n_derivs) const
{
    if (span < degree_ || span > degree_ + elements_ - 1) throw DomainError("span index out of range");
    BasisValues out;
    eval_span(x, span, n_derivs, out);
    return out;
}

void SplineSpace1D::eval_span(double u, int s, int n_derivs, BasisValues& out) const
{
    const int p = degree_;
    if (n_derivs < 0 || n_derivs > p) {
        throw DomainError("derivative order " + std::to_string(n_derivs) + " exceeds degree " +
                          std::to_string(p));
    }
    const auto& U = knots_;

    constexpr int kMax = 16;
    if (p + 1 > kMax) throw DomainError("spline degree too large");
    double ndu[kMax][kMax];
    double left[kMax];
    double right[kMax];
    double a[2][kMax];

    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - U[s + 1 - j];
        right[j] = U[s + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    out.first = s - p;
    out.degree = p;
    out.n_derivs = n_derivs;
    out.n_basis = n_;
    out.periodic = periodic();
    out.table.assign(std::size_t(n_derivs + 1) * (p + 1), 0.0);
    auto at = [&](int d, int j) -> double& { return out.table[std::size_t(d) * (p + 1) + j]; };

    for (int j = 0; j <= p; ++j) at(0, j) = ndu[j][p];

    // Knot-difference recursion for derivatives.
    for (int r = 0; r <= p; ++r) {
        int s1 = 0;
        int s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= n_derivs; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            at(k, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= n_derivs; ++k) {
        for (int j = 0; j <= p; ++j) at(k, j) *= factor;
        factor *= (p - k);
    }
}

std::vector<double> SplineSpace1D::greville() const
{
    if (degree_ < 1) throw DomainError("Greville points need degree >= 1");
    std::vector<double> g(n_);
    for (int i = 0; i < n_; ++i) {
        double sum = 0.0;
        for (int j = 1; j <= degree_; ++j) sum += knots_[i + j];
        g[i] = sum / degree_;
    }
    if (periodic()) {
        for (auto& x : g) x = normalize(x);
    } else {
        g.front() = a_;
        g.back() = b_;
    }
    return g;
}

std::vector<double> SplineSpace1D::greville_centroids() const
{
    if (n_ < 2) throw DomainError("Greville centroids need at least two Greville points");
    const auto g = greville();
    std::vector<double> c;
    if (periodic()) {
        const double h = element_size();
        c.reserve(n_);
        for (int i = 0; i < n_; ++i) c.push_back(normalize(g[i] + 0.5 * h));
    } else {
        c.reserve(n_ - 1);
        for (int i = 0; i + 1 < n_; ++i) c.push_back(0.5 * (g[i] + g[i + 1]));
    }
    return c;
}

std::vector<double> SplineSpace1D::greville_spacing() const
{
    if (periodic()) return std::vector<double>(n_, element_size());
    const auto g = greville();
    std::vector<double> h(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        double v = 0.0;
        if (i > 0) v = std::max(v, g[i] - g[i - 1]);
        if (i + 1 < n_) v = std::max(v, g[i + 1] - g[i]);
        h[i] = v;
    }
    return h;
}

TensorSpace::TensorSpace(std::vector<SplineSpace1D> spaces) : spaces_(std::move(spaces))
{
    if (spaces_.empty() || spaces_.size() > 3) {
        throw DomainError("tensor space dimension must be 1, 2 or 3");
    }
    shape_.dim = int(spaces_.size());
    for (int d = 0; d < shape_.dim; ++d) {
        shape_.n[d] = spaces_[d].size();
        greville_.push_back(spaces_[d].greville());
        centroids_.push_back(spaces_[d].size() >= 2 ? spaces_[d].greville_centroids()
                                                    : std::vector<double>{});
    }
}

Shape TensorSpace::centroid_shape() const
{
    Shape s;
    s.dim = shape_.dim;
    for (int d = 0; d < shape_.dim; ++d) s.n[d] = int(centroids_[d].size());
    return s;
}

std::array<double, 3> TensorSpace::point(std::size_t flat) const
{
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim(); ++d) {
        const auto i = flat % std::size_t(shape_.n[d]);
        flat /= std::size_t(shape_.n[d]);
        x[d] = greville_[d][i];
    }
    return x;
}

std::vector<double> TensorSpace::mesh_size() const
{
    std::vector<std::vector<double>> per_dir;
    for (const auto& s : spaces_) per_dir.push_back(s.greville_spacing());
    std::vector<double> h(size(), 0.0);
    for (int l = 0; l < shape_.n[2]; ++l) {
        for (int j = 0; j < shape_.n[1]; ++j) {
            for (int i = 0; i < shape_.n[0]; ++i) {
                double v = per_dir[0][i];
                if (dim() > 1) v = std::max(v, per_dir[1][j]);
                if (dim() > 2) v = std::max(v, per_dir[2][l]);
                h[shape_.index(i, j, l)] = v;
            }
        }
    }
    return h;
}

TensorSpace TensorSpace::lowered() const
{
    std::vector<SplineSpace1D> low;
    for (const auto& s : spaces_) low.push_back(s.lowered());
    return TensorSpace(std::move(low));
}

double eval_field(const TensorSpace& space, const FieldCoeffs& field, std::span<const double> point,
                  std::span<const int> deriv_orders)
{
    const int d = space.dim();
    if (int(point.size()) < d || int(deriv_orders.size()) < d) {
        throw DomainError("eval_field: point/derivative rank does not match space dimension");
    }
    if (field.shape != space.shape()) throw DomainError("eval_field: coefficient shape mismatch");
    std::array<BasisValues, 3> bv;
    for (int k = 0; k < d; ++k) bv[k] = space.space(k).eval(point[k], deriv_orders[k]);
    const auto shape = space.shape();
    std::array<int, 3> width{1, 1, 1};
    for (int k = 0; k < d; ++k) width[k] = bv[k].degree + 1;

    double sum = 0.0;
    for (int c = 0; c < width[2]; ++c) {
        const double wz = d > 2 ? bv[2](deriv_orders[2], c) : 1.0;
        const int iz = d > 2 ? bv[2].index(c) : 0;
        for (int b = 0; b < width[1]; ++b) {
            const double wy = d > 1 ? bv[1](deriv_orders[1], b) : 1.0;
            const int iy = d > 1 ? bv[1].index(b) : 0;
            for (int a = 0; a < width[0]; ++a) {
                const double wx = bv[0](deriv_orders[0], a);
                sum += wx * wy * wz * field.values[shape.index(bv[0].index(a), iy, iz)];
            }
        }
    }
    return sum;
}

double eval_field(const TensorSpace& space, const FieldCoeffs& field, std::span<const double> point)
{
    const std::array<int, 3> zero{0, 0, 0};
    return eval_field(space, field, point, zero);
}

}  // namespace igc
