#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "igc/laws.hpp"
#include "igc/linalg.hpp"
#include "igc/stabilization.hpp"

namespace igc {

/// Non-finite values appeared during time stepping.
class BlowUp : public Error {
public:
    using Error::Error;
};

/// Start-up of the residual viscosity while the BDF history fills:
/// ramp uses BDF orders 1..3 on the first steps, wait keeps the nonlinear
/// viscosity off until fourth order is available.
enum class BdfStartup { ramp, wait };

std::string to_string(BdfStartup s);
BdfStartup parse_bdf_startup(const std::string& s);

/// Coefficients of every solution component.
using State = std::vector<FieldCoeffs>;

struct SolverOptions {
    bool nonlinear = true;
    bool linear = true;
    StabConstants constants;
    Regularization regularization = Regularization::guermond_popov;
    InitPolicy init = InitPolicy::inject;
    NormalizationMode normalization = NormalizationMode::global;
    BdfStartup startup = BdfStartup::wait;

    /// Options taken from the case defaults.
    static SolverOptions from_case(const CaseDefinition& c);
};

/// Expanded viscous terms of the Guermond-Popov regularization at one point
/// with mu and kappa held constant. q: conserved state (d+2), dq[e*3+j]:
/// first derivatives, d2q[e*9+j*3+k]: second derivatives. Writes d+2 values.
void gp_viscous_terms(int dim, const double* q, const double* dq, const double* d2q, double mu, double kappa,
                      double* out);

/// Spatial discretization of one case on one mesh.
///
/// Holds per-direction evaluation operators at the collocation and residual
/// sampling grids, the mass solver and the linear stabilization operator.
/// Methods reuse internal scratch buffers, so one instance must not be used
/// from several threads at once.
class SemiDiscreteSystem {
public:
    SemiDiscreteSystem(const CaseDefinition& def, std::array<int, 3> n_elements, int degree, SolverOptions opt);

    const CaseDefinition& definition() const { return def_; }
    const SolverOptions& options() const { return opt_; }
    const TensorSpace& space() const { return space_; }
    const TensorMassSolver& mass() const { return mass_; }
    const GridOperators& point_ops() const { return pts_; }
    int components() const { return def_.law.components(); }
    const std::vector<double>& mesh_size() const { return h_; }
    GridTopology topology() const;

    State initial_state() const;

    /// Values at the collocation points.
    std::vector<double> point_values(const FieldCoeffs& c) const;

    /// Coefficient rates d c / d t at time t with a frozen viscosity.
    void rhs(const State& c, const ViscosityState& visc, double t, State& rates) const;

    /// Overwrites Dirichlet boundary coefficients with the fit of g(., t).
    void apply_bcs(State& c, double t) const;

    /// Viscosities from the state at the newest history entry.
    ViscosityState viscosity(const State& c, const HistoryBuffer& history) const;

    /// Residual of each equation at the Greville-cell centroids
    /// (time derivative from history plus flux divergence). Empty when the
    /// history holds a single snapshot.
    std::vector<std::vector<double>> residual(const State& c, const HistoryBuffer& history) const;

    /// Wavespeed at every collocation point; Euler states are checked for
    /// admissibility.
    std::vector<double> wavespeed(const std::vector<std::vector<double>>& values, double t) const;

private:
    struct Face {
        int dir;
        int side;
        std::vector<std::size_t> points;       // flat collocation indices on the face
        std::vector<std::array<double, 3>> x;  // their coordinates
        TensorMassSolver fit;                  // face interpolation (dim > 1)
    };

    void flux_fits(const std::vector<std::vector<double>>& u, std::vector<std::vector<FieldCoeffs>>& fits) const;
    void face_values(const Face& f, const BoundaryFn& g, double t, std::vector<std::vector<double>>& out) const;
    std::string describe_point(std::size_t p, double t) const;

    CaseDefinition def_;
    SolverOptions opt_;
    TensorSpace space_;
    TensorMassSolver mass_;
    GridOperators pts_;        // at Greville points, up to 2nd derivatives
    GridOperators centroids_;  // at centroids, up to 1st derivatives
    CoarseStabOperator coarse_;
    bool has_coarse_ = false;
    std::vector<double> h_;
    std::vector<Face> faces_;

    mutable std::vector<double> scratch_;
    mutable std::vector<double> tmp_;
};

struct SimState {
    State fields;
    double t = 0.0;
    long step = 0;
    HistoryBuffer history;
    ViscosityState viscosity;
};

/// Initial condition with its history entry at t = 0.
SimState initial_sim_state(const SemiDiscreteSystem& sys);

/// One classical RK4 step: freezes the viscosity from the state at the
/// start of the step, enforces boundary data after each stage and pushes
/// the result into the history.
void rk4_step(const SemiDiscreteSystem& sys, SimState& s, double dt);

struct Diagnostic {
    long step;
    double t;
    std::string field;
    double min;
    double max;
    double numax;
    double walltime_ms;
};

struct RunControl {
    double t_final = 0.0;
    double dt = 0.0;
    int diag_every = 0;  // 0: final step only
    std::function<void(const Diagnostic&)> on_diagnostic;
    std::function<void(const SimState&)> on_step;  // called after every step
};

/// Marches from the initial condition to t_final; the last step is
/// shortened to land on t_final exactly.
SimState run(const SemiDiscreteSystem& sys, const RunControl& ctl);

/// Continues an existing state to ctl.t_final.
void advance(const SemiDiscreteSystem& sys, SimState& s, const RunControl& ctl);

}  // namespace igc
