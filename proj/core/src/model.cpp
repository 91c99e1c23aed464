// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/model.hpp"

#include <cmath>
#include <string>

#include "adaspark/rng.hpp"

namespace adaspark {

namespace {

constexpr double kRmsEps = 1e-6;

Matrix seeded_matrix(std::size_t rows, std::size_t cols, double scale, GaussianStream& g) {
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = scale * g.next();
    }
    return m;
}

}  // namespace

void AttentionConfig::validate() const {
    if (num_heads < 1 || d_model < 1) {
        throw ConfigError("attention config: num_heads and d_model must be >= 1");
    }
    if (d_model % num_heads != 0) {
        throw ConfigError("attention config: d_model " + std::to_string(d_model) +
                          " is not divisible by num_heads " + std::to_string(num_heads));
    }
    if (d_k() % 2 != 0) {
        throw ConfigError("attention config: head dimension " + std::to_string(d_k()) +
                          " must be even for rotary encoding");
    }
    strategy.validate();
}

void FfnConfig::validate() const {
    if (d_model < 1 || d_ff < 1) {
        throw ConfigError("ffn config: d_model and d_ff must be >= 1");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("ffn config: epsilon must be positive");
    }
    strategy.validate();
}

LayerWeights LayerWeights::seeded(std::size_t d_model, std::size_t d_ff, std::uint64_t seed) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_model));
    GaussianStream g(seed);
    LayerWeights w;
    w.wq = seeded_matrix(d_model, d_model, scale, g);
    w.wk = seeded_matrix(d_model, d_model, scale, g);
    w.wv = seeded_matrix(d_model, d_model, scale, g);
    w.wo = seeded_matrix(d_model, d_model, scale, g);
    w.w_up = seeded_matrix(d_model, d_ff, scale, g);
    w.w_down = seeded_matrix(d_ff, d_model, scale, g);
    w.attn_norm_gain.assign(d_model, 1.0);
    w.ffn_norm_gain.assign(d_model, 1.0);
    return w;
}

void SequenceState::validate() const {
    if (num_vision > seq_len()) {
        throw ConfigError("sequence state: vision token count exceeds sequence length");
    }
    if (layout.total_tokens() != num_vision) {
        throw ConfigError("sequence state: layout covers " +
                          std::to_string(layout.total_tokens()) + " tokens but the vision prefix has " +
                          std::to_string(num_vision));
    }
}

Matrix rms_norm(const MatrixView& x, const Vector& gain) {
    if (gain.size() != x.cols) {
        throw ShapeError("rms_norm: gain length does not match feature dimension");
    }
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* src = x.row(i);
        double* dst = out.row(i);
        double mean_sq = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            mean_sq += src[j] * src[j];
        }
        mean_sq /= static_cast<double>(x.cols);
        const double inv = 1.0 / std::sqrt(mean_sq + kRmsEps);
        for (std::size_t j = 0; j < x.cols; ++j) {
            dst[j] = src[j] * inv * gain[j];
        }
    }
    return out;
}

double activation_apply(Activation act, double x) {
    switch (act) {
        case Activation::kSilu:
            return x / (1.0 + std::exp(-x));
        case Activation::kIdentity:
            return x;
    }
    return x;
}

Matrix ffn_transform(const MatrixView& normed_rows, const LayerWeights& weights,
                     const FfnConfig& config, MacCounter* counter, MacScope scope) {
    Matrix up = matmul(normed_rows, weights.w_up, counter, scope);
    for (double& v : up.data) {
        v = activation_apply(config.activation, v);
    }
    return matmul(up, weights.w_down, counter, scope);
}

Matrix head_slice(const Matrix& m, std::size_t head, std::size_t d_k) {
    Matrix out(m.rows, d_k);
    const std::size_t offset = head * d_k;
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* src = m.row(i) + offset;
        double* dst = out.row(i);
        for (std::size_t j = 0; j < d_k; ++j) {
            dst[j] = src[j];
        }
    }
    return out;
}

void write_head_slice(Matrix& dst, const MatrixView& src, std::size_t head, std::size_t d_k) {
    const std::size_t offset = head * d_k;
    for (std::size_t i = 0; i < src.rows; ++i) {
        const double* s = src.row(i);
        double* d = dst.row(i) + offset;
        for (std::size_t j = 0; j < d_k; ++j) {
            d[j] = s[j];
        }
    }
}

}  // namespace adaspark
