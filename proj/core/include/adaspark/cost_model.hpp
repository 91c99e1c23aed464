// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "adaspark/kernels.hpp"

namespace adaspark {

// Workload dimensions and observed selection statistics feeding the
// analytical formulas. All FLOPs values below use one MAC = 2 FLOPs.
struct CostInputs {
    std::size_t seq_len = 0;        // S, vision + text
    std::size_t vision_tokens = 0;
    std::size_t text_tokens = 0;
    std::size_t d_model = 0;
    std::size_t d_ff = 0;
    std::size_t tokens_per_cube = 0;  // C
    std::size_t num_cubes = 0;
    std::size_t num_layers = 1;
    double n_bar = 0.0;     // average selected cubes per (query, head)
    double r_bar = 1.0;     // activated fraction of vision tokens
    double local_avg = 0.0; // average attended local-prefix length
};

// 2 S^2 d: the quadratic approximation for one layer of dense causal
// attention (QK^T + AV only, causal 1/2 folded in).
double dense_attn_flops(std::size_t seq_len, std::size_t d_model);

// 2 S (S+1) d: the literal causal sum over prefixes, for one layer. The
// quadratic form above over-counts this MAC sum by a factor approaching 2
// for large S (the formula is stated in FLOPs, the sum in MACs).
double exact_causal_attn_flops(std::size_t seq_len, std::size_t d_model);

// 4 S nbar C d: selected-cube attention for one layer. The always-attended
// local prefix is excluded here and tracked separately.
double sparse_attn_flops(std::size_t seq_len, double n_bar, std::size_t tokens_per_cube,
                         std::size_t d_model);

// 4 S d dff: dense two-projection FFN for one layer.
double dense_ffn_flops(std::size_t seq_len, std::size_t d_model, std::size_t d_ff);

// 4 rbar S d dff: activated-token FFN for one layer.
double sparse_ffn_flops(double r_bar, std::size_t seq_len, std::size_t d_model,
                        std::size_t d_ff);

// Exact local-prefix FLOPs per run: every vision query attends its own
// cube's causal prefix and every text query its causal text prefix.
double local_attn_flops_exact(std::size_t num_cubes, std::size_t tokens_per_cube,
                              std::size_t text_tokens, std::size_t d_model,
                              std::size_t num_layers);

// Analytical values and measured counters from one run, commensurable
// per-run (num_layers folded into the analytical side).
struct FlopsReport {
    CostInputs inputs;

    double analytical_dense_attn = 0.0;        // quadratic approximation
    double analytical_dense_attn_exact = 0.0;  // literal causal sum
    double analytical_sparse_attn = 0.0;
    double analytical_local_attn = 0.0;
    double analytical_dense_ffn = 0.0;
    double analytical_sparse_ffn = 0.0;

    bool has_sparse = false;
    bool has_dense = false;
    double measured_attn_selected = 0.0;
    double measured_attn_local = 0.0;
    double measured_attn_dense = 0.0;
    double measured_ffn_vision = 0.0;
    double measured_ffn_text = 0.0;
    double measured_projection = 0.0;
    double measured_overhead = 0.0;

    // QKVO projections are paid identically by both paths and excluded
    // from the sparse-vs-dense comparison.
    double measured_sparse_total() const {
        return measured_attn_selected + measured_attn_local + measured_ffn_vision +
               measured_ffn_text;
    }
    double dense_reference_total() const {
        return analytical_dense_attn_exact + analytical_dense_ffn;
    }

    double reduction_ratio = 0.0;  // 1 - sparse / dense
};

FlopsReport build_flops_report(const CostInputs& inputs, const MacCounter* sparse_counter,
                               const MacCounter* dense_counter);

struct ReconcileLine {
    std::string name;
    double analytical = 0.0;
    double measured = 0.0;
    double rel_error = 0.0;
    double tolerance = 0.0;
    bool informational = false;
    bool passed = false;
};

struct ReconcileResult {
    bool passed = false;
    std::vector<ReconcileLine> lines;
};

// Compares each analytical term against its measured counterpart. Exact
// terms use tolerance 0 with a 0.5-FLOP absolute floor that absorbs the
// rounding of stating n_bar / r_bar as reals; the selected-cube attention
// term uses the given tolerance. Dense attention reconciles against the
// exact causal sum, with the quadratic approximation reported alongside.
// A report with no measured counters fails with a diagnostic line.
ReconcileResult reconcile(const FlopsReport& report, double tolerance);

}  // namespace adaspark
