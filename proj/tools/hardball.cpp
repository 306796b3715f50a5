// Command-line front end: hardball <command> --spec <file> [--out <dir>] [--seed <u64>]
//
// Commands: simulate, refine-study, uniqueness-probe, cluster-sim,
// gibbs-sample, reversibility, diagnostics. Spec files are `key = value`
// lines; a manifest.json from a previous run replays it byte-identically.
// Exit status: 0 success, 1 input error, 2 invariant violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hardball/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Brownian hard-ball simulator and verification harness"};
    app.require_subcommand(1);

    const std::vector<std::string> commands = {"simulate",     "refine-study", "uniqueness-probe",
                                               "cluster-sim",  "gibbs-sample", "reversibility",
                                               "diagnostics"};
    struct Args {
        std::string spec;
        std::string out = "hardball-out";
        std::optional<std::uint64_t> seed;
    };
    std::map<std::string, Args> args;
    for (const auto& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        Args& a = args[name];
        sub->add_option("--spec", a.spec, "experiment spec file (key = value) or manifest.json")
            ->required();
        sub->add_option("--out", a.out, "output directory");
        sub->add_option("--seed", a.seed, "override the spec seed");
    }

    CLI11_PARSE(app, argc, argv);

    for (const auto& name : commands) {
        if (!app.get_subcommand(name)->parsed()) continue;
        const Args& a = args[name];
        std::string error;
        const int status = hardball::run_experiment_file(a.spec, name, a.out, a.seed, &error);
        if (status == 1 && !error.empty()) std::cerr << "input error: " << error << "\n";
        return status;
    }
    return 1;
}
