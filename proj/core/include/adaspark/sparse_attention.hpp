// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adaspark/model.hpp"

namespace adaspark {

// Per-layer attention selection record. Counts are per (query, head) pair;
// a query in cube i can select at most i preceding cubes.
struct AttnTrace {
    std::size_t num_queries = 0;
    std::size_t num_heads = 0;
    std::size_t num_cubes = 0;
    std::size_t num_text = 0;
    std::vector<std::uint32_t> selected_count;  // (query * num_heads + head)
    std::vector<std::uint32_t> attended_count;  // attended key count incl. local prefix
    std::vector<std::uint64_t> text_cube_hits;  // per cube, over (text query, head)

    void reset(std::size_t queries, std::size_t heads, std::size_t cubes, std::size_t text);

    std::uint32_t selected(std::size_t query, std::size_t head) const {
        return selected_count[query * num_heads + head];
    }
    std::uint32_t attended(std::size_t query, std::size_t head) const {
        return attended_count[query * num_heads + head];
    }

    // Average selected cubes per (query, head): the observed N-bar.
    double mean_selected() const;
    // Average attended keys minus the selected-cube contribution: the
    // observed local prefix length.
    double mean_local(std::size_t tokens_per_cube) const;
    // Selection frequency of each cube by text queries, normalized by
    // (text queries x heads). Empty when there are no text tokens.
    std::vector<double> text_cube_freq() const;
    // Selected cubes averaged over heads for one query.
    double mean_selected_for_query(std::size_t query) const;
};

// Arithmetic mean key vector of every cube, one row per cube. keys holds
// the post-rotary key rows of the vision prefix for a single head.
Matrix mean_keys(const MatrixView& keys, const CubeLayout& layout);

// Relevance distribution of a query over the given cube mean keys:
// softmax of scaled dot products q . k_mean / sqrt(d_k). Zero candidate
// cubes (a query in the first cube) yield the empty distribution.
// Mean-key dot products are tracked as selection overhead.
SelectionDistribution cube_relevance(const double* q, const MatrixView& mean_key_rows,
                                     MacCounter* counter = nullptr);

// Cube-selective causal attention, heads concatenated, before the output
// projection. Selection is computed independently per head and per query:
// a vision query scores the cubes preceding its own, a text query scores
// all vision cubes and additionally attends its causal text prefix. The
// query's own cube prefix (self included) is always attended.
Matrix sparse_attend_heads(const SequenceState& state, const LayerWeights& weights,
                           const AttentionConfig& config, AttnTrace* trace = nullptr,
                           MacCounter* counter = nullptr);

// sparse_attend_heads followed by the output projection.
Matrix sparse_attend(const SequenceState& state, const LayerWeights& weights,
                     const AttentionConfig& config, AttnTrace* trace = nullptr,
                     MacCounter* counter = nullptr);

}  // namespace adaspark
