// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/cube_layout.hpp"

#include <stdexcept>
#include <string>

namespace adaspark {

namespace {

void require_divisible(std::size_t extent, std::size_t window, const char* axis) {
    if (window == 0 || extent % window != 0) {
        throw ConfigError(std::string("cube partition: ") + axis + " extent " +
                          std::to_string(extent) + " is not divisible by cube window " +
                          std::to_string(window));
    }
}

}  // namespace

CubeLayout CubeLayout::partition(const GridShape& grid, const CubeShape& cube) {
    if (grid.frames < 1 || grid.height < 1 || grid.width < 1) {
        throw ConfigError("cube partition: grid extents must all be >= 1");
    }
    require_divisible(grid.frames, cube.t, "frame");
    require_divisible(grid.height, cube.h, "height");
    require_divisible(grid.width, cube.w, "width");
    return CubeLayout(grid, cube);
}

CubeLayout::CubeLayout(const GridShape& grid, const CubeShape& cube)
    : grid_(grid),
      cube_(cube),
      blocks_t_(grid.frames / cube.t),
      blocks_h_(grid.height / cube.h),
      blocks_w_(grid.width / cube.w),
      num_cubes_(blocks_t_ * blocks_h_ * blocks_w_) {
    coords_.resize(grid.tokens());
    for (std::size_t f = 0; f < grid_.frames; ++f) {
        for (std::size_t r = 0; r < grid_.height; ++r) {
            for (std::size_t c = 0; c < grid_.width; ++c) {
                coords_[token_index(f, r, c)] = {f, r, c};
            }
        }
    }
}

std::size_t CubeLayout::token_index(std::size_t frame, std::size_t row, std::size_t col) const {
    if (frame >= grid_.frames || row >= grid_.height || col >= grid_.width) {
        throw std::out_of_range("token_index: coordinate outside grid");
    }
    const std::size_t bt = frame / cube_.t;
    const std::size_t bh = row / cube_.h;
    const std::size_t bw = col / cube_.w;
    const std::size_t cube_index = (bt * blocks_h_ + bh) * blocks_w_ + bw;
    const std::size_t lf = frame % cube_.t;
    const std::size_t lr = row % cube_.h;
    const std::size_t lc = col % cube_.w;
    const std::size_t offset = (lf * cube_.h + lr) * cube_.w + lc;
    return cube_index * tokens_per_cube() + offset;
}

GridCoord CubeLayout::grid_coord(std::size_t token_index) const {
    if (token_index >= coords_.size()) {
        throw std::out_of_range("grid_coord: token index outside grid");
    }
    return coords_[token_index];
}

}  // namespace adaspark
