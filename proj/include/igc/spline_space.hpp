#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace igc {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad construction arguments or an evaluation point outside the domain.
class DomainError : public Error {
public:
    using Error::Error;
};

enum class Topology { open, periodic };

std::string to_string(Topology t);

/// Nonzero basis values (and derivatives) at one point.
///
/// `table[d * (degree + 1) + l]` is the d-th derivative of the l-th active
/// basis function; active function l has global index `index(l)`.
struct BasisValues {
    int first = 0;      // unwrapped index of the first active function
    int degree = 0;
    int n_derivs = 0;
    int n_basis = 0;    // basis count of the space, used for periodic wrap
    bool periodic = false;
    std::vector<double> table;

    double operator()(int deriv, int local) const { return table[deriv * (degree + 1) + local]; }
    int index(int local) const;
};

/// Maximal-continuity B-spline space on a uniform grid of one interval.
///
/// Open spaces repeat the end knots degree+1 times (n = elements + degree);
/// periodic spaces wrap a uniform unclamped grid (n = elements). For periodic
/// spaces `knots()` returns the unrolled grid t_i = a + (i - k) h,
/// i = 0 .. elements + 2k.
class SplineSpace1D {
public:
    static SplineSpace1D make(double a, double b, int n_elements, int degree, Topology topology);

    /// Open space from an explicit uniform knot vector; degree 0 is allowed
    /// here (piecewise constants), make() requires degree >= 1.
    static SplineSpace1D from_open_knots(std::vector<double> knots, int degree);

    int degree() const { return degree_; }
    int size() const { return n_; }
    int elements() const { return elements_; }
    Topology topology() const { return topology_; }
    bool periodic() const { return topology_ == Topology::periodic; }
    double lower() const { return a_; }
    double upper() const { return b_; }
    double length() const { return b_ - a_; }
    double element_size() const { return (b_ - a_) / elements_; }
    std::span<const double> knots() const { return knots_; }

    /// Span index s with knots[s] <= x < knots[s+1]; the last span is closed.
    int find_span(double x) const;

    /// Periodic: maps x into [a, b). Open: throws if x is outside [a, b].
    double normalize(double x) const;

    BasisValues eval(double x, int n_derivs) const;

    /// Same as eval() but writes into `out` (reused across calls).
    void eval_into(double x, int n_derivs, BasisValues& out) const;

    /// Evaluates the polynomial pieces of span `span` at x, which may lie
    /// on the span boundary (one-sided limits at knots).
    BasisValues eval_in_span(double x, int span, int n_derivs) const;

    /// Greville abscissae, one per basis function (index-aligned with the basis).
    std::vector<double> greville() const;

    /// Midpoints of consecutive Greville points; the periodic list includes
    /// the wrap cell between the last and first point. Entry c lies between
    /// Greville points c and c+1 (mod n).
    std::vector<double> greville_centroids() const;

    /// Local mesh size at each Greville point: the larger of the gaps to the
    /// neighbouring Greville points (one-sided at open boundaries).
    std::vector<double> greville_spacing() const;

    /// Same elements, degree reduced by one.
    SplineSpace1D lowered() const;

private:
    SplineSpace1D() = default;
    void eval_span(double u, int span, int n_derivs, BasisValues& out) const;

    double a_ = 0.0;
    double b_ = 1.0;
    int degree_ = 0;
    int elements_ = 0;
    int n_ = 0;
    Topology topology_ = Topology::open;
    std::vector<double> knots_;
};

/// Up to three per-direction counts, x fastest.
struct Shape {
    int dim = 1;
    std::array<int, 3> n{1, 1, 1};

    std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2]; }
    std::size_t index(int i, int j = 0, int l = 0) const
    {
        return std::size_t(i) + std::size_t(n[0]) * (std::size_t(j) + std::size_t(n[1]) * l);
    }
    friend bool operator==(const Shape&, const Shape&) = default;
};

/// d-fold tensor product of 1D spaces with its collocation grid.
class TensorSpace {
public:
    explicit TensorSpace(std::vector<SplineSpace1D> spaces);

    int dim() const { return int(spaces_.size()); }
    const SplineSpace1D& space(int dir) const { return spaces_[dir]; }
    const std::vector<SplineSpace1D>& spaces() const { return spaces_; }
    Shape shape() const { return shape_; }
    std::size_t size() const { return shape_.size(); }

    const std::vector<double>& greville(int dir) const { return greville_[dir]; }
    const std::vector<double>& centroids(int dir) const { return centroids_[dir]; }
    Shape centroid_shape() const;

    /// Coordinates of collocation point `flat`.
    std::array<double, 3> point(std::size_t flat) const;

    /// Mesh size at collocation points: the maximum over directions of the
    /// per-direction Greville spacing.
    std::vector<double> mesh_size() const;

    TensorSpace lowered() const;

private:
    std::vector<SplineSpace1D> spaces_;
    Shape shape_;
    std::vector<std::vector<double>> greville_;
    std::vector<std::vector<double>> centroids_;
};

/// Control coefficients of one scalar field, x-fastest.
struct FieldCoeffs {
    Shape shape;
    std::vector<double> values;

    FieldCoeffs() = default;
    explicit FieldCoeffs(Shape s, double fill = 0.0) : shape(s), values(s.size(), fill) {}
};

/// Value of a partial derivative of the tensor-product spline at `point`.
double eval_field(const TensorSpace& space, const FieldCoeffs& field, std::span<const double> point,
                  std::span<const int> deriv_orders);

double eval_field(const TensorSpace& space, const FieldCoeffs& field, std::span<const double> point);

}  // namespace igc
