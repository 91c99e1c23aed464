// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adaspark/model.hpp"

namespace adaspark {

// Per-layer FFN activation record.
struct FfnTrace {
    std::size_t num_vision = 0;
    std::vector<double> keep_ratio;         // per cube, activated / C
    std::vector<std::uint32_t> activated;   // per cube
    std::vector<double> norm_ratio;         // per token, ||y|| / ||x||

    void reset(std::size_t vision, std::size_t cubes, std::size_t seq);

    double mean_keep_ratio() const;
    // Observed r-bar: activated vision tokens over all vision tokens.
    double activation_ratio() const;
    std::uint64_t activated_total() const;
};

// Importance distribution of a cube's (pre-normalized) token embeddings:
// each token's L2 norm over the stabilized sum of norms, re-normalized to
// sum exactly 1 so the top-p mass semantics hold. An all-zero cube falls
// back to the uniform distribution.
SelectionDistribution importance(const MatrixView& cube_embeddings, double epsilon);

// Token-selective FFN sublayer (residual included). Per vision cube, the
// configured selection picks the activated set from the importance
// distribution; activated tokens get x + FFN(norm(x)), bypassed tokens get
// x plus the mean FFN output of the cube's activated tokens (or x alone
// when mean compensation is off). Text tokens always take the dense path.
Matrix sparse_ffn(const SequenceState& state, const LayerWeights& weights,
                  const FfnConfig& config, FfnTrace* trace = nullptr,
                  MacCounter* counter = nullptr);

}  // namespace adaspark
