// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "adaspark/model.hpp"
#include "adaspark/sparse_ffn.hpp"

namespace adaspark {

// Full causal multi-head attention: every token attends every position up
// to and including its own. Used as the ground-truth reference for the
// sparse path. Scores are computed per query over the causal prefix only,
// so the recorded MAC count is the exact causal sum.
Matrix dense_attend_heads(const SequenceState& state, const LayerWeights& weights,
                          const AttentionConfig& config, MacCounter* counter = nullptr);

// dense_attend_heads followed by the output projection.
Matrix dense_attend(const SequenceState& state, const LayerWeights& weights,
                    const AttentionConfig& config, MacCounter* counter = nullptr);

// Dense FFN sublayer: y = x + FFN(norm(x)) for every row. The trace, when
// given, records keep ratio 1 per cube and the per-token norm ratios.
Matrix dense_ffn(const SequenceState& state, const LayerWeights& weights,
                 const FfnConfig& config, FfnTrace* trace = nullptr,
                 MacCounter* counter = nullptr);

// Minimal count of the largest weights whose cumulative share of the total
// reaches the threshold. Helper behind cumulative_attention_profile.
std::size_t keys_to_threshold(const Vector& weights, double threshold);

// Average, over text queries and heads, of the minimal number of vision
// keys (by descending dense attention weight) covering `threshold` of the
// query's total attention mass on vision keys. Returns 0 when the sequence
// has no text tokens.
double cumulative_attention_profile(const SequenceState& state, const LayerWeights& weights,
                                    const AttentionConfig& config, double threshold);

}  // namespace adaspark
