// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/dense_reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adaspark {

Matrix dense_attend_heads(const SequenceState& state, const LayerWeights& weights,
                          const AttentionConfig& config, MacCounter* counter) {
    state.validate();
    config.validate();
    const std::size_t seq = state.seq_len();
    const std::size_t heads = config.num_heads;
    const std::size_t dk = config.d_k();
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    const Matrix q_all = matmul(state.embeddings, weights.wq, counter, MacScope::kProjection);
    const Matrix k_all = matmul(state.embeddings, weights.wk, counter, MacScope::kProjection);
    const Matrix v_all = matmul(state.embeddings, weights.wv, counter, MacScope::kProjection);

    std::vector<std::size_t> positions(seq);
    std::iota(positions.begin(), positions.end(), std::size_t{0});

    Matrix concat(seq, config.d_model);
    std::vector<double> scores(seq);
    std::vector<double> head_out(dk);
    for (std::size_t h = 0; h < heads; ++h) {
        const Matrix qh = apply_rope(head_slice(q_all, h, dk), positions);
        const Matrix kh = apply_rope(head_slice(k_all, h, dk), positions);
        const Matrix vh = head_slice(v_all, h, dk);
        const MatrixView kh_view(kh);
        const MatrixView vh_view(vh);

        for (std::size_t g = 0; g < seq; ++g) {
            const double* q = qh.row(g);
            const std::size_t len = g + 1;
            dots_into(q, kh_view.row_range(0, len), scores.data(), counter,
                      MacScope::kAttnDense);
            for (std::size_t j = 0; j < len; ++j) {
                scores[j] *= inv_sqrt_dk;
            }
            softmax_inplace(scores.data(), len);

            std::fill(head_out.begin(), head_out.end(), 0.0);
            matvec_acc(scores.data(), vh_view.row_range(0, len), head_out.data(), counter,
                       MacScope::kAttnDense);

            double* dst = concat.row(g) + h * dk;
            for (std::size_t j = 0; j < dk; ++j) {
                dst[j] = head_out[j];
            }
        }
    }
    return concat;
}

Matrix dense_attend(const SequenceState& state, const LayerWeights& weights,
                    const AttentionConfig& config, MacCounter* counter) {
    const Matrix concat = dense_attend_heads(state, weights, config, counter);
    return matmul(concat, weights.wo, counter, MacScope::kProjection);
}

Matrix dense_ffn(const SequenceState& state, const LayerWeights& weights,
                 const FfnConfig& config, FfnTrace* trace, MacCounter* counter) {
    state.validate();
    config.validate();
    const std::size_t seq = state.seq_len();
    const std::size_t vis = state.num_vision;
    const std::size_t d = config.d_model;

    const Matrix normed = rms_norm(state.embeddings, weights.ffn_norm_gain);
    const MatrixView normed_view(normed);

    Matrix out = state.embeddings;
    if (vis > 0) {
        const Matrix transformed = ffn_transform(normed_view.row_range(0, vis), weights,
                                                 config, counter, MacScope::kFfnVision);
        for (std::size_t r = 0; r < vis; ++r) {
            const double* src = transformed.row(r);
            double* dst = out.row(r);
            for (std::size_t j = 0; j < d; ++j) {
                dst[j] += src[j];
            }
        }
    }
    if (seq > vis) {
        const Matrix transformed = ffn_transform(normed_view.row_range(vis, seq), weights,
                                                 config, counter, MacScope::kFfnText);
        for (std::size_t r = 0; r < transformed.rows; ++r) {
            const double* src = transformed.row(r);
            double* dst = out.row(vis + r);
            for (std::size_t j = 0; j < d; ++j) {
                dst[j] += src[j];
            }
        }
    }

    if (trace != nullptr) {
        trace->reset(vis, state.layout.num_cubes(), seq);
        for (std::size_t cube = 0; cube < state.layout.num_cubes(); ++cube) {
            trace->activated[cube] = static_cast<std::uint32_t>(state.layout.tokens_per_cube());
            trace->keep_ratio[cube] = 1.0;
        }
        for (std::size_t i = 0; i < seq; ++i) {
            const double pre = l2_norm(state.embeddings.row(i), d);
            const double post = l2_norm(out.row(i), d);
            trace->norm_ratio[i] = pre > 0.0 ? post / pre : 0.0;
        }
    }
    return out;
}

std::size_t keys_to_threshold(const Vector& weights, double threshold) {
    if (weights.empty()) {
        return 0;
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total <= 0.0) {
        return 0;
    }
    Vector sorted = weights;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const double target = threshold * total - 1e-12;
    double cum = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cum += sorted[i];
        if (cum >= target) {
            return i + 1;
        }
    }
    return sorted.size();
}

double cumulative_attention_profile(const SequenceState& state, const LayerWeights& weights,
                                    const AttentionConfig& config, double threshold) {
    state.validate();
    config.validate();
    if (!(threshold > 0.0) || !(threshold < 1.0)) {
        throw ConfigError("cumulative attention threshold must lie in (0, 1)");
    }
    const std::size_t seq = state.seq_len();
    const std::size_t vis = state.num_vision;
    if (seq == vis) {
        return 0.0;
    }
    const std::size_t heads = config.num_heads;
    const std::size_t dk = config.d_k();
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    const Matrix q_all = matmul(state.embeddings, weights.wq);
    const Matrix k_all = matmul(state.embeddings, weights.wk);

    std::vector<std::size_t> positions(seq);
    std::iota(positions.begin(), positions.end(), std::size_t{0});

    std::uint64_t count_sum = 0;
    std::uint64_t samples = 0;
    std::vector<double> scores(seq);
    for (std::size_t h = 0; h < heads; ++h) {
        const Matrix qh = apply_rope(head_slice(q_all, h, dk), positions);
        const Matrix kh = apply_rope(head_slice(k_all, h, dk), positions);
        const MatrixView kh_view(kh);
        for (std::size_t g = vis; g < seq; ++g) {
            const std::size_t len = g + 1;
            dots_into(qh.row(g), kh_view.row_range(0, len), scores.data());
            for (std::size_t j = 0; j < len; ++j) {
                scores[j] *= inv_sqrt_dk;
            }
            softmax_inplace(scores.data(), len);
            const Vector vision_weights(scores.begin(), scores.begin() + vis);
            count_sum += keys_to_threshold(vision_weights, threshold);
            ++samples;
        }
    }
    return static_cast<double>(count_sum) / static_cast<double>(samples);
}

}  // namespace adaspark
