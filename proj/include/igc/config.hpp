#pragma once

#include <array>
#include <string>
#include <vector>

#include "igc/integrator.hpp"

namespace igc {

/// Invalid configuration; the message lists every problem with its line.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// One run (or one convergence study) of a builtin case.
///
/// After parse_config every field holds a concrete value: anything not
/// given in the file comes from the case defaults.
struct RunConfig {
    // [case]
    std::string case_name;
    std::vector<int> n;  // elements per direction; a single value applies to all
    int degree = 0;
    double dt = 0.0;
    double t_final = 0.0;
    InitPolicy init = InitPolicy::inject;
    std::vector<int> meshes;   // convergence mode
    std::vector<int> degrees;  // convergence mode; defaults to {degree}

    // [stabilization]
    bool nonlinear = true;
    bool linear = true;
    StabConstants constants;
    Regularization regularization = Regularization::guermond_popov;  // Euler only
    NormalizationMode normalization = NormalizationMode::global;
    BdfStartup startup = BdfStartup::wait;

    // [output]
    std::string out_dir = "out";
    int dump_every = 0;       // steps between field dumps, 0: final only
    int dump_resolution = 0;  // samples per direction, 0: automatic
    int diag_every = 100;
    int reference_cells = 0;  // FV oracle cells per direction, 0: automatic

    bool operator==(const RunConfig&) const = default;

    /// Elements per direction for a case of dimension `dim`.
    std::array<int, 3> elements(int dim) const;
};

/// Parses the key = value format with [case], [stabilization] and [output]
/// sections. Lines before the first section header may hold keys of any
/// section. '#' starts a comment.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::string& path);

/// Text that parse_config maps back to the same RunConfig.
std::string serialize_config(const RunConfig& c);

/// Builtin case with the config's time and constant overrides applied.
CaseDefinition resolved_case(const RunConfig& c);

SolverOptions resolved_options(const RunConfig& c);

}  // namespace igc
