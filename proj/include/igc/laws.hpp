#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "igc/spline_space.hpp"

namespace igc {

/// Raised for Euler states with non-positive density or temperature.
class InadmissibleState : public Error {
public:
    using Error::Error;
};

enum class LawKind { advection, burgers, buckley_leverett, bl_gravity, euler };

enum class Regularization { laplacian, guermond_popov };

std::string to_string(LawKind k);
std::string to_string(Regularization r);
Regularization parse_regularization(const std::string& s);

/// Flux function and wavespeed of one conservation law in `dim` dimensions.
///
/// State layout: scalar laws use one component; Euler uses
/// (rho, rho u_1 .. rho u_d, E).
struct Law {
    LawKind kind = LawKind::advection;
    int dim = 1;
    std::array<double, 3> velocity{1.0, 1.0, 1.0};  // advection / Burgers direction
    double gamma = 1.4;

    static Law advection(int dim, std::array<double, 3> a);
    static Law burgers(int dim, std::array<double, 3> v);
    static Law buckley_leverett();
    static Law bl_gravity();
    static Law euler(int dim, double gamma);

    bool is_euler() const { return kind == LawKind::euler; }
    int components() const { return is_euler() ? dim + 2 : 1; }
    std::string name() const;
    std::vector<std::string> component_names() const;

    /// Component `dir` of the flux, one value per state component.
    void flux(const double* q, int dir, double* out) const;

    /// Scalar laws: f'(phi) in every direction (dim values).
    void flux_derivative(double phi, double* out) const;

    /// Scalar: |f'(phi)|. Euler: |u| + sqrt(gamma T); throws
    /// InadmissibleState if rho or T is not positive.
    double wavespeed(const double* q) const;
};

double euler_pressure(const double* q, int dim, double gamma);
double euler_temperature(const double* q, int dim, double gamma);

/// Conserved state from primitive (rho, u, p).
void euler_conserved(double rho, const double* u, double p, int dim, double gamma, double* q);

/// Throws InadmissibleState describing `where` if rho <= 0 or T <= 0.
void check_admissible(const double* q, int dim, double gamma, const std::string& where);

enum class BoundaryKind { periodic, dirichlet, outflow };

std::string to_string(BoundaryKind b);

enum class InitPolicy { inject, interpolate };

std::string to_string(InitPolicy p);
InitPolicy parse_init_policy(const std::string& s);

struct StabConstants {
    double c_rb = 4.0;
    double c_max = 0.5;
    double c_lin = 0.25;
    double prandtl = 0.5;  // Euler GP only

    bool operator==(const StabConstants&) const = default;
};

/// Point function x -> state (all components).
using StateFn = std::function<void(const double* x, double* q)>;
/// Point function (x, t) -> state.
using BoundaryFn = std::function<void(const double* x, double t, double* q)>;

struct CaseDefinition {
    std::string name;
    Law law;
    std::array<double, 3> lower{0, 0, 0};
    std::array<double, 3> upper{1, 1, 1};
    // bc[dir][0] lower side, bc[dir][1] upper side
    std::array<std::array<BoundaryKind, 2>, 3> bc{};
    StateFn initial;
    BoundaryFn boundary;       // Dirichlet data g
    BoundaryFn boundary_rate;  // dg/dt; null means g is constant in time
    double t_final = 1.0;
    double dt = 1e-4;
    StabConstants constants;
    Regularization regularization = Regularization::guermond_popov;
    InitPolicy init_policy = InitPolicy::inject;
    bool smooth = false;  // a closed-form smooth solution exists

    int dim() const { return law.dim; }
    bool periodic(int dir) const { return bc[dir][0] == BoundaryKind::periodic; }
};

const std::vector<std::string>& builtin_case_names();

/// Throws DomainError for an unknown name.
CaseDefinition builtin_case(const std::string& name);

/// Stabilization constants used with the Euler equations for a given
/// regularization and dimension.
StabConstants euler_constants(Regularization r, int dim);

/// Solution of phi_t + (phi^2/2)_x = 0 with smooth data phi0 by Newton on
/// phi = phi0(x - phi t). Throws DomainError if the characteristic map
/// has folded (1 + t phi0' <= 0).
double burgers_characteristic(const std::function<double(double)>& phi0,
                              const std::function<double(double)>& dphi0, double x, double t);

}  // namespace igc
