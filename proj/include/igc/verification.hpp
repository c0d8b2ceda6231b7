#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "igc/integrator.hpp"

namespace igc {

/// Closed-form or reference solution q(x, t).
struct ExactSolution {
    int components = 1;
    std::string provenance;
    double t_max = std::numeric_limits<double>::infinity();  // valid for t <= t_max
    std::function<void(const double* x, double t, double* q)> eval;
};

/// Self-similar solution of a 1D scalar Riemann problem with the jump at x0,
/// built from the max (left > right) or min (left < right) of f(u) - xi u
/// over the states between left and right.
ExactSolution exact_scalar_riemann(const Law& law, double left, double right, double x0);

/// Shock state of the Buckley-Leverett 1 -> 0 problem: the tangency point
/// f'(u) = f(u)/u, found by Newton.
double bl_tangent_state(const Law& law);

struct Primitive {
    double rho;
    double u;
    double p;
};

struct EulerStar {
    double p;
    double u;
};

/// Star-region pressure and velocity by Newton on the pressure function
/// (tolerance 1e-12). Throws DomainError if the data generate vacuum.
EulerStar euler_star_state(const Primitive& left, const Primitive& right, double gamma);

/// 1D Euler Riemann solution in conserved variables, jump at x0.
ExactSolution exact_euler_riemann(const Primitive& left, const Primitive& right, double gamma, double x0);

/// Smooth solutions: translated data for periodic advection, Newton on
/// phi = phi0(x - phi t) for 1D Burgers, Riemann invariants for the
/// gamma = 3 isentropic Euler case. Evaluation throws DomainError once
/// characteristics have crossed.
ExactSolution characteristics_solution(const CaseDefinition& def);

/// Exact solution used for error measurement of a builtin case, if one
/// exists.
std::optional<ExactSolution> exact_for_case(const CaseDefinition& def);

/// Cell averages from a first-order finite-volume run.
struct FvSolution {
    std::string case_name;
    int dim = 1;
    std::array<double, 3> lower{0, 0, 0};
    std::array<double, 3> upper{1, 1, 1};
    std::array<int, 3> cells{1, 1, 1};
    int components = 1;
    double t = 0.0;
    std::vector<std::vector<double>> values;  // [component][cell], x fastest

    /// Value of the cell containing x (clamped to the domain).
    void sample(const double* x, double* q) const;
    ExactSolution as_exact() const;
};

/// Rusanov finite volumes with forward Euler at the given CFL number.
/// Boundary kinds follow the case: periodic wrap, Dirichlet ghost cells
/// from g, outflow copies the interior cell.
FvSolution reference_fv_solution(const CaseDefinition& def, std::array<int, 3> cells, double t_final,
                                 double cfl = 0.4);

void save_fv(const FvSolution& s, const std::string& path);
/// Throws Error if the file is missing or malformed.
FvSolution load_fv(const std::string& path);

/// Loads `dir/<case>_<n>.fv` if it matches; otherwise computes and stores it.
FvSolution cached_fv_solution(const CaseDefinition& def, std::array<int, 3> cells, double t_final,
                              const std::string& dir, double cfl = 0.4);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

enum class Norm { L1, L2 };

std::string to_string(Norm n);

/// ||q_h - q_exact|| per component over the domain with (k + extra)^d
/// Gauss points per element.
std::vector<double> error_norms(const TensorSpace& space, const State& s, const ExactSolution& exact, double t,
                                Norm norm, int extra_points = 2);

/// log(e_coarse / e_fine) / log(h_coarse / h_fine).
double observed_rate(double e_coarse, double h_coarse, double e_fine, double h_fine);

struct ConvergenceRow {
    std::string case_name;
    int k = 0;
    int n_elements = 0;
    double h = 0.0;
    std::string norm;  // "L2", or "L2:rho" for systems
    double error = std::numeric_limits<double>::quiet_NaN();
    double rate = std::numeric_limits<double>::quiet_NaN();  // vs previous row with same k and norm
    std::string failure;                                      // non-empty if the run failed
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;

    /// Header `case,k,n_elements,h,norm,error,rate` and one line per row.
    std::string to_csv() const;
    /// Rate of the finest mesh for (k, norm); NaN if missing.
    double finest_rate(int k, const std::string& norm) const;
    const ConvergenceRow* find(int k, int n_elements, const std::string& norm) const;
};

struct StudySpec {
    CaseDefinition def;
    std::vector<int> degrees;
    std::vector<int> meshes;  // elements per direction
    SolverOptions solver;
    double dt = 0.0;
    double t_final = 0.0;
    std::vector<Norm> norms{Norm::L1, Norm::L2};
    std::vector<int> components;  // empty: all
    ExactSolution exact;
};

/// Runs every (k, mesh) pair and tabulates errors and pairwise rates.
/// Failed runs leave a row with `failure` set; the others continue.
ConvergenceTable convergence_study(const StudySpec& spec);

}  // namespace igc
