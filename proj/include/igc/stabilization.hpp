#pragma once

#include <array>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "igc/laws.hpp"
#include "igc/linalg.hpp"

namespace igc {

/// Last few coefficient snapshots (all components) with their times,
/// newest first.
class HistoryBuffer {
public:
    explicit HistoryBuffer(int capacity = 5);

    /// Times must increase strictly.
    void push(double t, std::vector<FieldCoeffs> snapshot);
    void clear() { entries_.clear(); }

    int size() const { return int(entries_.size()); }
    int capacity() const { return capacity_; }
    /// BDF order available at the newest snapshot: min(4, size - 1).
    int order() const;
    double time(int age) const { return entries_[age].t; }
    const std::vector<FieldCoeffs>& snapshot(int age) const { return entries_[age].fields; }

    /// Time derivative of component `comp` at the newest time as spline
    /// coefficients. Empty history or order 0 yields zeros.
    FieldCoeffs time_derivative(int comp) const;

private:
    struct Entry {
        double t;
        std::vector<FieldCoeffs> fields;
    };
    int capacity_;
    std::deque<Entry> entries_;
};

/// Weights w_j with f'(times[0]) ~ sum_j w_j f(times[j]); exact for
/// polynomials of degree < times.size(). Spacing may be nonuniform.
std::vector<double> bdf_weights(std::span<const double> times);

/// Boundary handling per direction for stencil operations on a grid.
struct GridTopology {
    Shape shape;
    std::array<bool, 3> periodic{false, false, false};
};

/// Max of |r| over the Greville-cell centroids adjacent to each collocation
/// point. `centroid_values` has n-1 (open) or n (periodic) entries per
/// direction.
std::vector<double> local_residual_max(const GridTopology& grid, std::span<const double> centroid_values);

/// Max of `values` over the box of 2*half_width+1 points per direction,
/// clamped at open boundaries and wrapped at periodic ones.
std::vector<double> stencil_max(const GridTopology& grid, std::span<const double> values, int half_width);

/// Normalization m = (max - min) - |v_i - mean| over the 3^d box of
/// adjacent points including the point itself.
std::vector<double> normalization(const GridTopology& grid, std::span<const double> values);

/// max_i |v_i - mean(v)| over the whole grid.
double global_normalization(std::span<const double> values);

/// Floor for the normalization: 1e-12 times the global range of `values`,
/// at least 1e-14.
double normalization_floor(std::span<const double> values);

double residual_viscosity(double c_rb, double h, double r_tilde, double m, double m_floor);
double first_order_viscosity(double c_max, double h, double wavespeed);
double artificial_viscosity(double nu_rb, double nu_fo);
/// kappa = (prandtl / c_rb) * mu.
double gp_kappa(double mu, double prandtl, double c_rb);

enum class ViscosityMode { scalar, euler_laplacian, euler_gp };

/// global: one value, max |v - mean(v)| over the domain.
/// stencil: per point, (max - min) - |v_i - mean| over the 3^d box. Collapses
/// to O(h^2) at smooth extrema, which lets the residual feed back on itself.
enum class NormalizationMode { global, stencil };

std::string to_string(NormalizationMode m);
NormalizationMode parse_normalization(const std::string& s);

/// Per-collocation-point viscosities, computed once per time step.
struct ViscosityState {
    std::vector<double> nu_art;  // GP mode: mu_art
    std::vector<double> kappa;   // GP mode only
    std::vector<double> nu_lin;
    std::vector<double> nu_rb;
    std::vector<double> nu_fo;
    bool frozen = false;

    double max_nu() const;
};

struct ViscosityInputs {
    GridTopology grid;
    Shape centroid_shape;
    std::span<const double> h;          // mesh size per point
    std::span<const double> wavespeed;  // pointwise wavespeed
    // One entry per equation; residuals may be empty to switch off the
    // nonlinear viscosity (start-up step).
    std::vector<std::span<const double>> residual;  // at centroids
    std::vector<std::span<const double>> values;    // at collocation points
};

struct ViscosityOptions {
    ViscosityMode mode = ViscosityMode::scalar;
    NormalizationMode normalization = NormalizationMode::global;
    bool nonlinear = true;
    bool linear = true;
    int wavespeed_half_width = 4;
};

ViscosityState compute_viscosity(const ViscosityInputs& in, const StabConstants& k, const ViscosityOptions& opt);

/// Coarse-interpolation stabilization operator: for coefficients c returns
/// at the Greville points of S^h
///   lap(phi) - div(Pi grad_hat(phi)),
/// where grad_hat interpolates grad(phi) in S^h and Pi re-interpolates
/// it in the degree k-1 space on the same elements.
class CoarseStabOperator {
public:
    CoarseStabOperator() = default;
    explicit CoarseStabOperator(const TensorSpace& space);

    Shape coarse_shape() const { return coarse_mass_.shape(); }

    void apply(std::span<const double> coeffs, std::vector<double>& out) const;

private:
    int dim_ = 0;
    GridOperators fine_ops_;        // S^h at its Greville points, up to 2nd derivatives
    GridOperators to_coarse_;       // S^h at coarse Greville points
    GridOperators coarse_to_fine_;  // S^{h,k-1} at fine Greville points, 1st derivatives
    TensorMassSolver fine_mass_;
    TensorMassSolver coarse_mass_;
};

}  // namespace igc
