#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "cantorflow/run.hpp"

using namespace cantorflow;

namespace {

RunConfig base_config(const std::string& command) {
    RunConfig cfg;
    cfg.command = command;
    cfg.system_descriptor = "odometer base=2";
    cfg.seed = 42;
    return cfg;
}

} // namespace

TEST_CASE("reports are byte-stable for a fixed seed and config") {
    for (const char* cmd : {"system", "towers", "k0", "verify-exact-sequence", "verify-order-iso",
                            "suspension-flow", "suspension-flowbox", "bratteli"}) {
        RunConfig cfg = base_config(cmd);
        cfg.slices = {"0", "00", "000"};
        cfg.depth = 4;
        cfg.stages = 3;
        cfg.samples = 20;
        cfg.flow_times = {"1/2", "-3/10"};
        RunResult a = run(cfg);
        RunResult b = run(cfg);
        CHECK(render_report(a.report) == render_report(b.report));
        CHECK(a.ok == b.ok);
        CHECK(a.report["ok"] == a.ok);
    }
}

TEST_CASE("towers report matches the spec example") {
    RunConfig cfg = base_config("towers");
    cfg.slices = {"0", "00", "000"};
    RunResult res = run(cfg);
    CHECK(res.ok);
    const Json& towers = res.report["result"]["towers"];
    REQUIRE(towers.size() == 3);
    for (const auto& t : towers) {
        CHECK(t["heights"] == Json::array({1}));
        CHECK(t["partition_ok"] == true);
        CHECK(t["kac_ok"] == true);
    }
}

TEST_CASE("bratteli DOT output for three dyadic stages is a path with multiplicity 2") {
    RunConfig cfg = base_config("bratteli");
    cfg.slices = {"0", "00", "000"};
    cfg.dot_path = "/tmp/cantorflow_test_bratteli.dot";
    RunResult res = run(cfg);
    CHECK(res.ok);
    std::string dot = res.report["result"]["dot"].get<std::string>();
    CHECK(dot.find("digraph bratteli") != std::string::npos);
    CHECK(dot.find("s0_t0 -> s1_t0 [label=\"2\"]") != std::string::npos);
    CHECK(dot.find("s1_t0 -> s2_t0 [label=\"2\"]") != std::string::npos);
    std::ifstream in(cfg.dot_path);
    REQUIRE(in.good());
    std::string file_contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(file_contents == dot);
    std::remove(cfg.dot_path.c_str());

    // Single stage: vertices only.
    RunConfig single = base_config("bratteli");
    single.slices = {"0"};
    RunResult sres = run(single);
    CHECK(sres.report["result"]["dot"].get<std::string>().find("->") == std::string::npos);
}

TEST_CASE("fibonacci bratteli multiplicities come from the traversal counts") {
    RunConfig cfg = base_config("bratteli");
    cfg.system_descriptor = "substitution a:ab,b:a";
    cfg.auto_nest = 3;
    RunResult res = run(cfg);
    CHECK(res.ok);
    CHECK(res.report["result"]["edge_counts_exact"] == true);
    CHECK(res.report["result"]["dot"].get<std::string>().find("->") != std::string::npos);
}

TEST_CASE("json report written to a file matches stdout rendering") {
    RunConfig cfg = base_config("k0");
    cfg.depth = 3;
    cfg.out_path = "/tmp/cantorflow_test_report.json";
    RunResult res = run(cfg);
    std::ifstream in(cfg.out_path);
    REQUIRE(in.good());
    std::string file_contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(file_contents == render_report(res.report));
    std::remove(cfg.out_path.c_str());
}

TEST_CASE("invalid configurations raise") {
    RunConfig cfg = base_config("frobnicate");
    CHECK_THROWS_AS((void)run(cfg), std::invalid_argument);
    RunConfig bad = base_config("towers");
    bad.system_descriptor = "odometer base=0";
    CHECK_THROWS_AS((void)run(bad), std::invalid_argument);
    RunConfig kc = base_config("kernels-check");
    kc.slices = {};
    CHECK_THROWS_AS((void)run(kc), std::invalid_argument);
}

TEST_CASE("cli binary exit codes") {
    // Locate the binary next to the test executable.
    int ok_code = std::system(
        "./cantorflow towers --system \"odometer base=2\" --slices 0,00 > /dev/null 2>&1");
    CHECK(WEXITSTATUS(ok_code) == 0);
    int err_code = std::system("./cantorflow towers --system \"odometer base=0\" > /dev/null 2>&1");
    CHECK(WEXITSTATUS(err_code) == 2);
}
