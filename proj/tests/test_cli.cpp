// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end exercises of the installed CLI surface: subcommands, exit
// status contract (0 ok, 1 property failure, 2 configuration error), file
// output and byte-level determinism.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string out_path = "/tmp/adaspark_cli_out.txt";
    const std::string command =
        std::string(ADASPARK_CLI_PATH) + " " + args + " > " + out_path + " 2>/dev/null";
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WEXITSTATUS(status);
    std::ifstream in(out_path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    result.output = buffer.str();
    return result;
}

const char* kSmall =
    "--grid 2x8x8 --cube 4x4x2 --layers 1 --heads 2 --d-model 32 --d-ff 64 --text-tokens 4";

}  // namespace

TEST_CASE("cli: run emits a json report and exits 0") {
    const CliResult r = run_cli(std::string("run ") + kSmall);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"schema\": \"adaspark.run_report/1\"") != std::string::npos);
}

TEST_CASE("cli: invalid configurations exit with status 2") {
    CHECK(run_cli("run --grid 0x8x8").exit_code == 2);
    CHECK(run_cli(std::string("run ") + kSmall + " --cube 3x4x2").exit_code == 2);
    CHECK(run_cli(std::string("run ") + kSmall + " --p 1.5").exit_code == 2);
    CHECK(run_cli("run --mode sideways").exit_code == 2);
    CHECK(run_cli("sweep --axis p").exit_code == 2);          // missing --values
    CHECK(run_cli("run --no-such-flag 1").exit_code == 2);
    CHECK(run_cli(std::string("diagnostics ") + kSmall + " --format csv").exit_code == 2);
    // malformed config is rejected before the verify suite runs
    CHECK(run_cli("verify --grid 2x8x8 --cube 3x3x3").exit_code == 2);
}

TEST_CASE("cli: --out writes the report and repeated runs are byte-identical") {
    const std::string a = "/tmp/adaspark_cli_a.json";
    const std::string b = "/tmp/adaspark_cli_b.json";
    CHECK(run_cli(std::string("run ") + kSmall + " --seed 11 --out " + a).exit_code == 0);
    CHECK(run_cli(std::string("run ") + kSmall + " --seed 11 --out " + b).exit_code == 0);
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    REQUIRE(!sa.str().empty());
    CHECK(sa.str() == sb.str());
}

TEST_CASE("cli: run csv format has a header and one row") {
    const CliResult r = run_cli(std::string("run ") + kSmall + " --format csv");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("seed,mode,grid") == 0);
    std::size_t lines = 0;
    for (char c : r.output) {
        lines += c == '\n' ? 1 : 0;
    }
    CHECK(lines == 2);
}

TEST_CASE("cli: sweep emits csv rows and survives invalid values") {
    const CliResult r =
        run_cli(std::string("sweep ") + kSmall + " --axis p --values 1.0,0.7,3.0");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("value,status") == 0);
    CHECK(r.output.find("1.0,ok") != std::string::npos);
    CHECK(r.output.find("3.0,error") != std::string::npos);
}

TEST_CASE("cli: diagnostics and flops emit their schemas") {
    const CliResult diag = run_cli(std::string("diagnostics ") + kSmall);
    CHECK(diag.exit_code == 0);
    CHECK(diag.output.find("adaspark.diagnostics/1") != std::string::npos);

    const CliResult flops = run_cli(std::string("flops ") + kSmall + " --format csv");
    CHECK(flops.exit_code == 0);
    CHECK(flops.output.find("fraction,n_bar") != std::string::npos);
}

TEST_CASE("cli: verify exits 0 clean and 1 under fault injection") {
    const CliResult ok = run_cli("verify");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("verification passed") != std::string::npos);
    CHECK(ok.output.find("[FAIL]") == std::string::npos);

    const CliResult faulty = run_cli("verify --inject-fault topp-boundary");
    CHECK(faulty.exit_code == 1);
    CHECK(faulty.output.find("[FAIL] C3") != std::string::npos);
    CHECK(run_cli("verify --inject-fault warp-core").exit_code == 2);
}
