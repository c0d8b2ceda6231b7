#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "igc/spline_space.hpp"

namespace igc {

/// Raised when a collocation matrix cannot be factored.
class SingularInterpolation : public Error {
public:
    using Error::Error;
};

/// Sparse 1D operator with a fixed number of entries per row.
///
/// Used for basis evaluation matrices (rows = points, columns = basis
/// functions) and for collocation matrices (square, cyclic when periodic).
struct LineOperator {
    int rows = 0;
    int cols = 0;
    int width = 0;
    std::vector<int> col;        // rows * width column indices
    std::vector<double> weight;  // rows * width values

    double at(int r, int c) const;
    std::vector<double> to_dense() const;  // row-major rows x cols
};

/// Rows N_j^{(deriv)}(points[r]) of the basis of `space`.
LineOperator basis_operator(const SplineSpace1D& space, std::span<const double> points, int deriv);

/// Entry (i, j) = N_j(greville_i).
LineOperator collocation_matrix(const SplineSpace1D& space);

/// LU factorization of a 1D collocation matrix.
///
/// Banded LU without pivoting while pivots stay above 1e-12 * max|a_ij|,
/// otherwise banded LU with partial pivoting (upper band grows to kl + ku).
/// Cyclic matrices factor their banded core and apply a Woodbury correction
/// for the corner blocks; very small cyclic systems fall back to dense LU.
class BandedFactor {
public:
    enum class Kind { banded, banded_pivoted, cyclic, dense };

    BandedFactor() = default;

    int size() const { return n_; }
    Kind kind() const { return kind_; }
    int lower_bandwidth() const { return core_.kl; }
    int upper_bandwidth() const { return core_.ku_stored; }
    /// Ratio of the largest to the smallest pivot magnitude; a cheap
    /// conditioning indicator.
    double pivot_ratio() const;

    void solve(std::span<double> b) const;

    /// Solves `count` systems stored interleaved: entry i of system r lives
    /// at b[i * count + r].
    void solve_block(double* b, int count) const;

    friend BandedFactor factorize(const LineOperator& matrix, const std::string& label);

private:
    struct Band {
        int n = 0;
        int kl = 0;
        int ku_stored = 0;
        bool pivoted = false;
        std::vector<double> a;  // row-major, width kl + ku_stored + 1
        std::vector<int> ipiv;

        double& at(int i, int j) { return a[std::size_t(i) * width() + (j - i + kl)]; }
        double at(int i, int j) const { return a[std::size_t(i) * width() + (j - i + kl)]; }
        int width() const { return kl + ku_stored + 1; }
        void solve_block(double* b, int count) const;
    };
    struct Dense {
        int n = 0;
        std::vector<double> lu;
        std::vector<int> ipiv;
        void solve_block(double* b, int count) const;
    };

    static bool band_lu(Band& band, double tol);
    static bool dense_lu(Dense& dense, double tol);

    int n_ = 0;
    Kind kind_ = Kind::banded;
    Band core_;
    Dense dense_;
    // Woodbury data for cyclic matrices.
    std::vector<int> corner_cols_;
    std::vector<double> z_;  // n x r, row-major
    Dense capacitance_;
    double pivot_min_ = 0.0;
    double pivot_max_ = 0.0;
};

BandedFactor factorize(const LineOperator& matrix, const std::string& label = "matrix");

/// Applies `op` along `axis` of a tensor array. The output shape equals
/// `in_shape` with n[axis] replaced by op.rows.
void apply_axis(const LineOperator& op, int axis, const Shape& in_shape, std::span<const double> in,
                std::span<double> out);

/// Per-axis operator product; a null entry leaves that axis untouched.
struct TensorOperator {
    std::array<const LineOperator*, 3> ops{nullptr, nullptr, nullptr};

    Shape output_shape(const Shape& in) const;
    void apply(const Shape& in_shape, std::span<const double> in, std::vector<double>& out,
               std::vector<double>& scratch) const;
};

/// Basis evaluation of a tensor space on a tensor grid of points, with
/// first and second derivative rows per direction.
class GridOperators {
public:
    GridOperators() = default;
    /// points[d] lists the grid coordinates along direction d.
    GridOperators(const TensorSpace& space, const std::array<std::vector<double>, 3>& points, int max_deriv);

    /// Greville grid of `space` itself.
    static GridOperators at_greville(const TensorSpace& space, int max_deriv);

    int dim() const { return dim_; }
    Shape coeff_shape() const { return coeff_shape_; }
    Shape grid_shape() const { return grid_shape_; }
    const LineOperator& op(int dir, int deriv) const { return ops_[dir][deriv]; }

    /// Partial derivative with the given orders at every grid point.
    void eval(std::span<const double> coeffs, std::array<int, 3> orders, std::vector<double>& out,
              std::vector<double>& scratch) const;

private:
    int dim_ = 0;
    int max_deriv_ = 0;
    Shape coeff_shape_;
    Shape grid_shape_;
    std::array<std::array<LineOperator, 3>, 3> ops_;
};

/// Inverse of the Kronecker-product collocation matrix via per-direction
/// banded solves.
class TensorMassSolver {
public:
    TensorMassSolver() = default;
    explicit TensorMassSolver(const TensorSpace& space);

    const BandedFactor& factor(int dir) const { return factors_[dir]; }
    Shape shape() const { return shape_; }

    /// Overwrites grid values with spline coefficients.
    void solve_in_place(std::span<double> values) const;
    FieldCoeffs solve(std::span<const double> values) const;

private:
    Shape shape_;
    std::vector<BandedFactor> factors_;
};

/// Interpolates Greville-grid samples; the result reproduces every sample.
FieldCoeffs fit_field(const TensorSpace& space, std::span<const double> samples_at_greville);

}  // namespace igc
