// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "adaspark/errors.hpp"

namespace adaspark {

struct GridShape {
    std::size_t frames = 1;  // T
    std::size_t height = 1;  // H, patch rows
    std::size_t width = 1;   // W, patch cols

    std::size_t tokens() const { return frames * height * width; }
};

struct CubeShape {
    std::size_t h = 1;
    std::size_t w = 1;
    std::size_t t = 1;

    std::size_t tokens() const { return h * w * t; }
};

struct GridCoord {
    std::size_t frame = 0;
    std::size_t row = 0;
    std::size_t col = 0;
};

// Partition of a T x H x W token grid into h x w x t cubes, together with
// the cube-major flattened ordering every causal statement refers to.
// Cubes are ordered block-raster with the temporal block outermost so that
// earlier frames strictly precede later frames; tokens inside a cube are
// frame-major, then row, then column. Cube i's tokens occupy the contiguous
// index range [i*C, (i+1)*C), so for cubes i < j every token of i precedes
// every token of j.
class CubeLayout {
public:
    struct Range {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::size_t size() const { return end - begin; }
    };

    // Requires strict divisibility on every axis; non-divisible grids are
    // rejected rather than padded so every cube holds exactly h*w*t tokens.
    static CubeLayout partition(const GridShape& grid, const CubeShape& cube);

    std::size_t num_cubes() const { return num_cubes_; }
    std::size_t tokens_per_cube() const { return cube_.tokens(); }
    std::size_t total_tokens() const { return grid_.tokens(); }

    Range cube_range(std::size_t cube_index) const {
        const std::size_t c = tokens_per_cube();
        return {cube_index * c, (cube_index + 1) * c};
    }

    std::size_t cube_of(std::size_t token_index) const { return token_index / tokens_per_cube(); }

    // Flattened cube-major index of an original grid coordinate.
    std::size_t token_index(std::size_t frame, std::size_t row, std::size_t col) const;

    // Original grid coordinate of a flattened index (inverse of token_index).
    GridCoord grid_coord(std::size_t token_index) const;

    const GridShape& grid() const { return grid_; }
    const CubeShape& cube() const { return cube_; }

private:
    CubeLayout(const GridShape& grid, const CubeShape& cube);

    GridShape grid_;
    CubeShape cube_;
    std::size_t blocks_t_ = 0;
    std::size_t blocks_h_ = 0;
    std::size_t blocks_w_ = 0;
    std::size_t num_cubes_ = 0;
    std::vector<GridCoord> coords_;  // per flattened token index
};

}  // namespace adaspark
