// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "adaspark/harness.hpp"

namespace adaspark::test {

inline SequenceState make_state(std::uint64_t seed, GridShape grid, CubeShape cube,
                                std::size_t text_tokens, std::size_t d_model) {
    RunConfig config;
    config.seed = seed;
    config.grid = grid;
    config.cube = cube;
    config.num_text_tokens = text_tokens;
    config.d_model = d_model;
    return make_workload(config);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    }
    return worst;
}

}  // namespace adaspark::test
