#include <fmt/format.h>

#include <iostream>

#include "CLI11.hpp"
#include "igc/harness.hpp"
#include "igc/laws.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

struct Overrides {
    std::string out;
    int dump_every = -1;
};

// Loads a config and applies command-line overrides. Exits with status 2 on
// config errors.
igc::RunConfig load(const std::string& path, const Overrides& o)
{
    auto c = igc::load_config(path);
    if (!o.out.empty()) c.out_dir = o.out;
    if (o.dump_every >= 0) c.dump_every = o.dump_every;
    return c;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stabilized isogeometric collocation solver for conservation laws"};
    app.require_subcommand(1);

    int threads = 0;
    Overrides ov;
    app.add_option("--threads", threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", ov.out, "output directory, overrides [output] dir");
    app.add_option("--dump-every", ov.dump_every, "steps between field dumps, overrides the config")
        ->check(CLI::NonNegativeNumber);

    std::string config_path;
    auto* solve = app.add_subcommand("solve", "run one case");
    solve->add_option("config", config_path, "config file")->required();
    auto* converge = app.add_subcommand("converge", "convergence study over meshes and degrees");
    converge->add_option("config", config_path, "config file")->required();
    auto* dry = app.add_subcommand("dry-run", "validate and echo a config without computing");
    dry->add_option("config", config_path, "config file")->required();
    auto* list = app.add_subcommand("case-list", "list builtin cases");

    // flags are accepted after the subcommand too
    for (auto* sub : {solve, converge, dry}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : igc::exit_config_error;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    if (list->parsed()) {
        for (const auto& name : igc::builtin_case_names()) {
            const auto def = igc::builtin_case(name);
            fmt::print("{:20s} {}D  {}\n", name, def.dim(), def.law.name());
        }
        return igc::exit_ok;
    }

    igc::RunConfig cfg;
    try {
        cfg = load(config_path, ov);
    } catch (const igc::ConfigError& e) {
        fmt::print(stderr, "config error in {}:\n{}\n", config_path, e.what());
        return igc::exit_config_error;
    }

    try {
        if (dry->parsed()) {
            fmt::print("{}\n{}", igc::describe_run(cfg), igc::serialize_config(cfg));
            return igc::exit_ok;
        }
        if (converge->parsed()) return igc::run_convergence(cfg, std::cout);
        return igc::run_case(cfg, std::cout);
    } catch (const igc::Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
}
