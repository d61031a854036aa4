// Command dispatch shared by the CLI and the tests: every subcommand is a
// pure function from a RunConfig to a schema-versioned JSON report.
#ifndef CANTORFLOW_RUN_HPP
#define CANTORFLOW_RUN_HPP

#include <string>
#include <vector>

#include "json.hpp"

namespace cantorflow {

using Json = nlohmann::ordered_json;

struct RunConfig {
    std::string command;                  // towers | k0 | verify-exact-sequence | ...
    std::string system_descriptor;
    std::vector<std::string> slices;      // cylinder prefix words ("" = full)
    int auto_nest = 0;                    // generate slices from the canonical point
    int depth = 6;
    int stages = 4;
    int grid = 64;
    std::string tau_json;                 // {"a":"1","b":"3/2"}; empty = constant 1
    std::string point;                    // odometer digit code for flow commands
    std::vector<std::string> flow_times;  // rationals
    unsigned long long seed = 20260810;
    int samples = 100;
    bool include_timings = false;         // timings break byte-stability; opt in
    std::string out_path;                 // "" = stdout only
    std::string dot_path;                 // bratteli output
};

struct RunResult {
    Json report;
    bool ok = false;
};

// Dispatches to the module operations; report["ok"] mirrors RunResult::ok.
RunResult run(const RunConfig& config);

std::string render_report(const Json& report);

} // namespace cantorflow

#endif
