#include "liftsched/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace liftsched;

int main(int argc, char** argv) {
    CLI::App app{"Gain-scheduled H2 synthesis through lifting to passivity"};
    app.require_subcommand(1);

    SynthesizeArgs syn;
    CLI::App* s = app.add_subcommand("synthesize", "Design a controller for a problem file and verify it");
    s->add_option("problem", syn.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
    s->add_option("--out", syn.out, "Controller JSON to write");
    s->add_option("--certificate", syn.certificate, "Certificate JSON to write (default: next to --out)");
    s->add_option("--report", syn.report, "Also write the report here");

    VerifyArgs ver;
    CLI::App* v = app.add_subcommand("verify", "Re-check a controller and certificate against a problem file");
    v->add_option("problem", ver.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
    v->add_option("controller", ver.controller, "Controller JSON")->required()->check(CLI::ExistingFile);
    v->add_option("certificate", ver.certificate, "Certificate JSON")->required()->check(CLI::ExistingFile);

    SweepArgs sw;
    bool no_timing = false;
    CLI::App* w = app.add_subcommand("sweep", "Optimal bounds over a plant family and scaling masks");
    w->add_option("family", sw.family, "Family JSON")->required()->check(CLI::ExistingFile);
    w->add_option("--grid", sw.grid, "a0:a1:steps");
    w->add_option("--masks", sw.masks, "Mask ids: none, block-diagonal, diagonal")->delimiter(',');
    w->add_option("--out", sw.out, "CSV to write (default: stdout)");
    w->add_option("--plot", sw.plot, "Plot data to write (a, gamma per mask)");
    w->add_flag("--no-timing", no_timing, "Leave the solve-time column empty");
    w->add_option("--threads", sw.threads, "Worker threads (0: hardware concurrency)");

    SimulateArgs sim;
    CLI::App* m = app.add_subcommand("simulate", "Impulse responses under random piecewise-constant scheduling");
    m->add_option("problem", sim.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
    m->add_option("controller", sim.controller, "Controller JSON")->required()->check(CLI::ExistingFile);
    m->add_option("--seed", sim.seed, "Scheduling trajectory seed");
    m->add_option("--horizon", sim.horizon, "Simulated time");
    m->add_option("--period", sim.period, "Scheduling switch period");
    m->add_option("--out", sim.out, "Trajectory CSV to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (*s) return cmd_synthesize(syn, std::cout, std::cerr);
    if (*v) return cmd_verify(ver, std::cout, std::cerr);
    if (*w) {
        sw.timing = !no_timing;
        return cmd_sweep(sw, std::cout, std::cerr);
    }
    return cmd_simulate(sim, std::cout, std::cerr);
}
