// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstddef>

#include "adaspark/cube_layout.hpp"
#include "adaspark/kernels.hpp"
#include "adaspark/selection.hpp"

namespace adaspark {

struct AttentionConfig {
    std::size_t num_heads = 4;
    std::size_t d_model = 64;
    SelectionStrategy strategy = SelectionStrategy::top_p(0.7);

    std::size_t d_k() const { return d_model / num_heads; }
    void validate() const;
};

enum class Activation {
    kSilu,      // x * sigmoid(x)
    kIdentity,  // test hook for linearity probes
};

struct FfnConfig {
    std::size_t d_model = 64;
    std::size_t d_ff = 256;
    SelectionStrategy strategy = SelectionStrategy::top_p(0.7);
    bool mean_compensation = true;
    double epsilon = 1e-6;  // stabilizer in the importance denominator
    Activation activation = Activation::kSilu;

    void validate() const;
};

// Projection and FFN weights for one transformer layer, plus the RMS-norm
// gains of the two sublayers.
struct LayerWeights {
    Matrix wq, wk, wv, wo;  // d_model x d_model
    Matrix w_up;            // d_model x d_ff
    Matrix w_down;          // d_ff x d_model
    Vector attn_norm_gain;  // d_model
    Vector ffn_norm_gain;   // d_model

    // Gaussian entries scaled by 1/sqrt(d_model), gains at 1.
    static LayerWeights seeded(std::size_t d_model, std::size_t d_ff, std::uint64_t seed);
};

// Full token sequence of one forward pass: a cube-major vision prefix
// covered by the layout, followed by text tokens.
struct SequenceState {
    Matrix embeddings;  // S x d_model
    std::size_t num_vision = 0;
    CubeLayout layout;

    std::size_t seq_len() const { return embeddings.rows; }
    std::size_t num_text() const { return seq_len() - num_vision; }
    bool is_text(std::size_t pos) const { return pos >= num_vision; }

    void validate() const;  // throws ConfigError on inconsistent shape

    SequenceState with_embeddings(Matrix m) const {
        return SequenceState{std::move(m), num_vision, layout};
    }
};

// Row-wise RMS normalization with elementwise gain.
Matrix rms_norm(const MatrixView& x, const Vector& gain);

double activation_apply(Activation act, double x);

// Rows already normalized -> two-projection FFN transform (no residual).
Matrix ffn_transform(const MatrixView& normed_rows, const LayerWeights& weights,
                     const FfnConfig& config, MacCounter* counter, MacScope scope);

// Copy of head `head`'s column block [head*d_k, (head+1)*d_k).
Matrix head_slice(const Matrix& m, std::size_t head, std::size_t d_k);

// Write a per-head block back into the concatenated matrix.
void write_head_slice(Matrix& dst, const MatrixView& src, std::size_t head, std::size_t d_k);

}  // namespace adaspark
