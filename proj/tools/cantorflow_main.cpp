// cantorflow: tower decompositions, K0 verification suites, suspension flows
// and kernel checks on symbolic Cantor systems.
#include <iostream>

#include "CLI11.hpp"
#include "cantorflow/run.hpp"

using cantorflow::RunConfig;

namespace {

void add_common(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--system", cfg.system_descriptor,
                    "system descriptor, e.g. \"odometer base=2\" or \"substitution a:ab,b:a\"")
        ->required();
    cmd->add_option("--slices", cfg.slices, "nested slice prefix words (\"\" for the full set)")
        ->delimiter(',');
    cmd->add_option("--auto-nest", cfg.auto_nest,
                    "generate this many nested slices around the canonical point");
    cmd->add_option("--depth", cfg.depth, "working partition depth");
    cmd->add_option("--stages", cfg.stages, "number of stages");
    cmd->add_option("--grid", cfg.grid, "fiber grid size N");
    cmd->add_option("--tau", cfg.tau_json, "roof function JSON: {\"a\":\"1\",\"b\":\"3/2\"}");
    cmd->add_option("--seed", cfg.seed, "RNG seed (reports are byte-stable per seed)");
    cmd->add_option("--samples", cfg.samples, "sample count for property checks");
    cmd->add_option("--out", cfg.out_path, "write the JSON report to this path");
    cmd->add_flag("--timings", cfg.include_timings, "include timings (breaks byte-stability)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact Rokhlin towers, dimension-group K0 and suspension kernels on Cantor systems"};
    app.require_subcommand(1);

    RunConfig cfg;
    bool json_out = true;
    app.add_flag("--json,!--no-json", json_out, "print the JSON report (default on)");

    auto* c_system = app.add_subcommand("system", "validate and describe a system");
    add_common(c_system, cfg);

    auto* c_towers = app.add_subcommand("towers", "Rokhlin tower decompositions along nested slices");
    add_common(c_towers, cfg);

    auto* c_k0 = app.add_subcommand("k0", "crossed-product K0 at a partition depth");
    add_common(c_k0, cfg);

    auto* c_verify = app.add_subcommand("verify", "verification suites");
    c_verify->require_subcommand(1);
    auto* c_exact = c_verify->add_subcommand("exact-sequence", "exact-row reports per stage");
    add_common(c_exact, cfg);
    auto* c_order = c_verify->add_subcommand("order-iso", "ordered-group isomorphism at truncation");
    add_common(c_order, cfg);

    auto* c_susp = app.add_subcommand("suspension", "suspension flow commands");
    c_susp->require_subcommand(1);
    auto* c_flow = c_susp->add_subcommand("flow", "flow a point and test the group law");
    add_common(c_flow, cfg);
    c_flow->add_option("--point", cfg.point, "odometer start digits (default the zero point)");
    c_flow->add_option("--times", cfg.flow_times, "rational flow times")->delimiter(',');
    auto* c_fbox = c_susp->add_subcommand("flowbox", "build and verify a flowbox structure");
    add_common(c_fbox, cfg);

    auto* c_kern = app.add_subcommand("kernels", "kernel operator checks");
    c_kern->require_subcommand(1);
    auto* c_kcheck = c_kern->add_subcommand("check", "bump-suite identities at one grid size");
    add_common(c_kcheck, cfg);

    auto* c_brat = app.add_subcommand("bratteli", "emit the Bratteli diagram as DOT");
    add_common(c_brat, cfg);
    c_brat->add_option("--dot", cfg.dot_path, "write the DOT digraph to this path");

    CLI11_PARSE(app, argc, argv);

    if (c_system->parsed()) cfg.command = "system";
    if (c_towers->parsed()) cfg.command = "towers";
    if (c_k0->parsed()) cfg.command = "k0";
    if (c_verify->parsed() && c_exact->parsed()) cfg.command = "verify-exact-sequence";
    if (c_verify->parsed() && c_order->parsed()) cfg.command = "verify-order-iso";
    if (c_susp->parsed() && c_flow->parsed()) cfg.command = "suspension-flow";
    if (c_susp->parsed() && c_fbox->parsed()) cfg.command = "suspension-flowbox";
    if (c_kern->parsed() && c_kcheck->parsed()) cfg.command = "kernels-check";
    if (c_brat->parsed()) cfg.command = "bratteli";

    try {
        cantorflow::RunResult res = cantorflow::run(cfg);
        if (json_out) std::cout << cantorflow::render_report(res.report);
        return res.ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
