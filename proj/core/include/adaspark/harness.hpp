// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaspark/cost_model.hpp"
#include "adaspark/dense_reference.hpp"
#include "adaspark/sparse_attention.hpp"
#include "adaspark/sparse_ffn.hpp"

namespace adaspark {

enum class RunMode { kSparse, kDense, kBoth };

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);

// "TxHxW", e.g. 8x16x16.
GridShape parse_grid(const std::string& text);
// "hxwxt", e.g. 8x8x4.
CubeShape parse_cube(const std::string& text);
std::string format_grid(const GridShape& grid);
std::string format_cube(const CubeShape& cube);

// "topp:0.7", "topk:4", "uniform:0.25"; the parameter may be omitted for
// the default of the kind.
SelectionStrategy parse_strategy(const std::string& text);
std::string format_strategy(const SelectionStrategy& strategy);

struct RunConfig {
    std::uint64_t seed = 42;
    GridShape grid{8, 16, 16};
    CubeShape cube{8, 8, 4};
    std::size_t num_text_tokens = 32;
    std::size_t num_layers = 4;
    std::size_t num_heads = 4;
    std::size_t d_model = 64;
    std::size_t d_ff = 256;
    SelectionStrategy strategy = SelectionStrategy::top_p(0.7);
    // FFN-path override; the strategy sweep calibrates the two modules
    // separately to hit an equivalent compression level.
    std::optional<SelectionStrategy> ffn_strategy;
    bool mean_compensation = true;
    RunMode mode = RunMode::kSparse;

    void validate() const;
    AttentionConfig attention_config() const;
    FfnConfig ffn_config() const;
};

// Flat key=value file (# comments allowed). Unknown keys are rejected.
RunConfig load_config_file(const std::string& path);
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

// Seeded synthetic workload: vision embeddings carry a shared per-cube
// component plus token noise so the selection distributions are
// non-degenerate; text embeddings come from a separate stream.
SequenceState make_workload(const RunConfig& config);

// One transformer layer: pre-norm attention sublayer with residual,
// then the FFN sublayer (which owns its own norm and residual).
Matrix sparse_layer_forward(const SequenceState& state, const LayerWeights& weights,
                            const AttentionConfig& attn_config, const FfnConfig& ffn_config,
                            AttnTrace* attn_trace = nullptr, FfnTrace* ffn_trace = nullptr,
                            MacCounter* counter = nullptr);
Matrix dense_layer_forward(const SequenceState& state, const LayerWeights& weights,
                           const AttentionConfig& attn_config, const FfnConfig& ffn_config,
                           FfnTrace* ffn_trace = nullptr, MacCounter* counter = nullptr);

struct LayerStats {
    double attn_mean_cubes_selected = 0.0;
    double attn_mean_attended_keys = 0.0;
    double attn_mean_local_prefix = 0.0;
    std::vector<double> text_cube_selection_freq;  // empty without text queries
    double ffn_mean_keep_ratio = 0.0;
    std::vector<double> keep_ratio_per_cube;
    double norm_ratio_vision_mean = 0.0;
    double norm_ratio_text_mean = 0.0;
};

struct RunReport {
    RunConfig config;
    std::size_t vision_tokens = 0;
    std::size_t total_tokens = 0;
    std::size_t num_cubes = 0;
    std::size_t tokens_per_cube = 0;
    std::vector<LayerStats> layers;
    FlopsReport flops;
    bool has_equivalence = false;
    std::vector<double> equiv_rel_error_per_layer;
    double equiv_max_rel_error = 0.0;
    // Reported on the console only; serialized reports must be
    // byte-identical across runs of the same seed/config/build.
    double wall_time_ms = 0.0;

    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

RunReport run(const RunConfig& config);

enum class SweepAxis { kCubeShape, kCubeSize, kP, kStrategy };

SweepAxis parse_sweep_axis(const std::string& text);

struct SweepRow {
    std::string value;  // echo of the swept value
    bool ok = false;
    std::string error;
    double n_bar = 0.0;
    double r_bar = 0.0;
    double sparse_flops = 0.0;
    double dense_flops = 0.0;
    double reduction = 0.0;
};

// One sparse run per value. Incompatible values (such as a non-divisible
// cube) produce an error row; the sweep continues. For the strategy axis,
// "topk" and "uniform" without an explicit parameter are calibrated from a
// pilot run of the base strategy to an equivalent compression level.
std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<std::string>& values,
                            const RunConfig& base);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string sweep_to_json(const std::vector<SweepRow>& rows);

// Dense-stack diagnostics: per-layer cumulative-attention key counts for
// text queries at the given threshold, and per-token FFN norm ratios split
// by modality.
std::string diagnostics_json(const RunConfig& config, double threshold);

// Analytical-only cost table over hypothetical selection fractions.
std::string flops_table_csv(const RunConfig& config);
std::string flops_table_json(const RunConfig& config);

}  // namespace adaspark
