#pragma once

#include <iosfwd>
#include <string>

#include "igc/config.hpp"
#include "igc/integrator.hpp"

namespace igc {

enum ExitStatus : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_blow_up = 3,
};

/// Samples per direction used when the config leaves dump_resolution at 0.
int default_dump_resolution(const RunConfig& c, int dim);

/// Writes `x[,y[,z]],<components>[,u..,p],nu_art[,mu_art,kappa_art],nu_lin`
/// on a uniform grid of `resolution` points per direction including the
/// domain boundary. Euler dumps add velocity and pressure. Viscosities are
/// interpolated multilinearly between collocation points.
void dump_fields(const SemiDiscreteSystem& sys, const State& state, const ViscosityState& visc, int resolution,
                 const std::string& path);

/// Single run. Writes into c.out_dir:
///   config.ini        the resolved config
///   diagnostics.csv   step,t,field,min,max,numax,walltime_ms
///   fields_final.csv  (and fields_step<N>.csv when dump_every > 0)
///   errors.csv        component,norm,error when an exact solution exists
/// Returns an ExitStatus; messages go to `log`.
int run_case(const RunConfig& c, std::ostream& log);

/// Convergence study over c.degrees x c.meshes; writes convergence.csv.
/// Without a closed-form solution a cached finite-volume reference is used.
int run_convergence(const RunConfig& c, std::ostream& log);

/// Human-readable summary of what a run would do.
std::string describe_run(const RunConfig& c);

}  // namespace igc
