// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line harness: seeded sparse/dense forward passes, the
// verification suite, ablation sweeps and diagnostics.
//
// Exit status: 0 success, 1 property failure, 2 configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaspark/harness.hpp"
#include "adaspark/verify.hpp"

namespace {

using adaspark::ConfigError;
using adaspark::RunConfig;

struct CommonOpts {
    std::string config_path;
    std::string seed, grid, cube, text_tokens, layers, heads, d_model, d_ff;
    std::string strategy, p, k, ratio, mean_compensation, mode;
    std::string out_path;
    std::string format = "json";
};

void add_common_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--seed", opts.seed, "RNG seed");
    cmd->add_option("--grid", opts.grid, "vision grid TxHxW, e.g. 8x16x16");
    cmd->add_option("--cube", opts.cube, "cube window HxWxT, e.g. 8x8x4");
    cmd->add_option("--text-tokens", opts.text_tokens, "trailing text token count");
    cmd->add_option("--layers", opts.layers, "number of transformer layers");
    cmd->add_option("--heads", opts.heads, "number of attention heads");
    cmd->add_option("--d-model", opts.d_model, "model width");
    cmd->add_option("--d-ff", opts.d_ff, "FFN intermediate width");
    cmd->add_option("--strategy", opts.strategy, "selection strategy: topp[:p] | topk[:k] | uniform[:r]");
    cmd->add_option("--p", opts.p, "top-p threshold (implies strategy topp)");
    cmd->add_option("--k", opts.k, "top-k count (implies strategy topk)");
    cmd->add_option("--ratio", opts.ratio, "uniform ratio (implies strategy uniform)");
    cmd->add_option("--mean-compensation", opts.mean_compensation,
                    "mean compensation for bypassed tokens (true/false)");
    cmd->add_option("--mode", opts.mode, "sparse | dense | both");
    cmd->add_option("--out", opts.out_path, "write output to this path instead of stdout");
    cmd->add_option("--format", opts.format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
}

RunConfig build_config(const CommonOpts& opts) {
    RunConfig config;
    if (!opts.config_path.empty()) {
        config = adaspark::load_config_file(opts.config_path);
    }
    const std::pair<const char*, const std::string*> entries[] = {
        {"seed", &opts.seed},       {"grid", &opts.grid},
        {"cube", &opts.cube},       {"text_tokens", &opts.text_tokens},
        {"layers", &opts.layers},   {"heads", &opts.heads},
        {"d_model", &opts.d_model}, {"d_ff", &opts.d_ff},
        {"mode", &opts.mode},       {"mean_compensation", &opts.mean_compensation},
        {"strategy", &opts.strategy},
        {"p", &opts.p},             {"k", &opts.k},
        {"ratio", &opts.ratio},
    };
    for (const auto& [key, value] : entries) {
        if (!value->empty()) {
            adaspark::apply_config_entry(config, key, *value);
        }
    }
    config.validate();
    return config;
}

void emit(const CommonOpts& opts, const std::string& text) {
    if (opts.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(opts.out_path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open output path '" + opts.out_path + "'");
    }
    out << text;
}

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        out.push_back(token);
    }
    return out;
}

int cmd_run(const CommonOpts& opts) {
    const RunConfig config = build_config(opts);
    const adaspark::RunReport report = adaspark::run(config);
    if (opts.format == "csv") {
        emit(opts, adaspark::RunReport::csv_header() + "\n" + report.to_csv_row() + "\n");
    } else {
        emit(opts, report.to_json());
    }
    std::fprintf(stderr, "run: %zu tokens, %zu layers, %.1f ms\n", report.total_tokens,
                 config.num_layers, report.wall_time_ms);
    return 0;
}

int cmd_verify(const CommonOpts& opts, const std::string& fault_name) {
    build_config(opts);  // reject malformed configs before the suite runs
    adaspark::InjectedFault fault = adaspark::InjectedFault::kNone;
    if (fault_name == "topp-boundary") {
        fault = adaspark::InjectedFault::kToppBoundary;
    } else if (!fault_name.empty() && fault_name != "none") {
        throw ConfigError("unknown fault '" + fault_name + "'");
    }
    const auto results = adaspark::run_verification(fault);
    for (const auto& check : results) {
        std::printf("[%s] %s\n", check.passed ? "PASS" : "FAIL", check.name.c_str());
        for (const auto& note : check.notes) {
            std::printf("    %s\n", note.c_str());
        }
    }
    const bool ok = adaspark::all_passed(results);
    std::printf("%s\n", ok ? "verification passed" : "verification FAILED");
    return ok ? 0 : 1;
}

int cmd_sweep(const CommonOpts& opts, const std::string& axis_name, const std::string& values) {
    const RunConfig config = build_config(opts);
    const adaspark::SweepAxis axis = adaspark::parse_sweep_axis(axis_name);
    const auto rows = adaspark::sweep(axis, split_csv_list(values), config);
    emit(opts, opts.format == "json" ? adaspark::sweep_to_json(rows)
                                     : adaspark::sweep_to_csv(rows));
    return 0;
}

int cmd_diagnostics(const CommonOpts& opts, double threshold) {
    const RunConfig config = build_config(opts);
    if (opts.format == "csv") {
        throw ConfigError("diagnostics supports json output only");
    }
    emit(opts, adaspark::diagnostics_json(config, threshold));
    return 0;
}

int cmd_flops(const CommonOpts& opts) {
    const RunConfig config = build_config(opts);
    emit(opts, opts.format == "csv" ? adaspark::flops_table_csv(config)
                                    : adaspark::flops_table_json(config));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive cube-token sparsity harness"};
    app.require_subcommand(1);

    CommonOpts run_opts, verify_opts, sweep_opts, diag_opts, flops_opts;
    std::string fault_name;
    std::string axis_name;
    std::string values;
    double threshold = 0.7;

    CLI::App* run_cmd = app.add_subcommand("run", "seeded forward pass, emits a run report");
    add_common_options(run_cmd, run_opts);

    CLI::App* verify_cmd =
        app.add_subcommand("verify", "oracle-equivalence and property suite");
    add_common_options(verify_cmd, verify_opts);
    verify_cmd->add_option("--inject-fault", fault_name,
                           "test-only mutation: none | topp-boundary");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "ablation sweep over one axis");
    sweep_opts.format = "csv";
    add_common_options(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--axis", axis_name, "cube_shape | cube_size | p | strategy")
        ->required();
    sweep_cmd->add_option("--values", values, "comma-separated axis values")->required();

    CLI::App* diag_cmd =
        app.add_subcommand("diagnostics", "dense-stack attention and FFN diagnostics");
    add_common_options(diag_cmd, diag_opts);
    diag_cmd->add_option("--threshold", threshold, "cumulative attention threshold");

    CLI::App* flops_cmd = app.add_subcommand("flops", "analytical FLOPs table");
    add_common_options(flops_cmd, flops_opts);

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) {
            return cmd_run(run_opts);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(verify_opts, fault_name);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(sweep_opts, axis_name, values);
        }
        if (diag_cmd->parsed()) {
            return cmd_diagnostics(diag_opts, threshold);
        }
        if (flops_cmd->parsed()) {
            return cmd_flops(flops_opts);
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
