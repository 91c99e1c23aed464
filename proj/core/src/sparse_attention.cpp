// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/sparse_attention.hpp"

#include <cmath>
#include <numeric>

namespace adaspark {

void AttnTrace::reset(std::size_t queries, std::size_t heads, std::size_t cubes,
                      std::size_t text) {
    num_queries = queries;
    num_heads = heads;
    num_cubes = cubes;
    num_text = text;
    selected_count.assign(queries * heads, 0);
    attended_count.assign(queries * heads, 0);
    text_cube_hits.assign(cubes, 0);
}

double AttnTrace::mean_selected() const {
    if (selected_count.empty()) {
        return 0.0;
    }
    const std::uint64_t total =
        std::accumulate(selected_count.begin(), selected_count.end(), std::uint64_t{0});
    return static_cast<double>(total) / static_cast<double>(selected_count.size());
}

double AttnTrace::mean_local(std::size_t tokens_per_cube) const {
    if (attended_count.empty()) {
        return 0.0;
    }
    std::uint64_t local = 0;
    for (std::size_t i = 0; i < attended_count.size(); ++i) {
        local += attended_count[i] -
                 static_cast<std::uint64_t>(selected_count[i]) * tokens_per_cube;
    }
    return static_cast<double>(local) / static_cast<double>(attended_count.size());
}

std::vector<double> AttnTrace::text_cube_freq() const {
    if (num_text == 0) {
        return {};
    }
    std::vector<double> freq(text_cube_hits.size());
    const double denom = static_cast<double>(num_text) * static_cast<double>(num_heads);
    for (std::size_t i = 0; i < freq.size(); ++i) {
        freq[i] = static_cast<double>(text_cube_hits[i]) / denom;
    }
    return freq;
}

double AttnTrace::mean_selected_for_query(std::size_t query) const {
    std::uint64_t total = 0;
    for (std::size_t h = 0; h < num_heads; ++h) {
        total += selected(query, h);
    }
    return static_cast<double>(total) / static_cast<double>(num_heads);
}

Matrix mean_keys(const MatrixView& keys, const CubeLayout& layout) {
    if (keys.rows != layout.total_tokens()) {
        throw ShapeError("mean_keys: key row count does not match layout coverage");
    }
    const std::size_t n = layout.num_cubes();
    const std::size_t c = layout.tokens_per_cube();
    Matrix means(n, keys.cols);
    for (std::size_t cube = 0; cube < n; ++cube) {
        const auto range = layout.cube_range(cube);
        double* dst = means.row(cube);
        for (std::size_t r = range.begin; r < range.end; ++r) {
            const double* src = keys.row(r);
            for (std::size_t j = 0; j < keys.cols; ++j) {
                dst[j] += src[j];
            }
        }
        for (std::size_t j = 0; j < keys.cols; ++j) {
            dst[j] /= static_cast<double>(c);
        }
    }
    return means;
}

SelectionDistribution cube_relevance(const double* q, const MatrixView& mean_key_rows,
                                     MacCounter* counter) {
    SelectionDistribution dist;
    dist.source = DistributionSource::kCubeRelevance;
    if (mean_key_rows.rows == 0) {
        return dist;
    }
    dist.probs.resize(mean_key_rows.rows);
    dots_into(q, mean_key_rows, dist.probs.data(), counter, MacScope::kOverhead);
    const double scale = 1.0 / std::sqrt(static_cast<double>(mean_key_rows.cols));
    for (double& v : dist.probs) {
        v *= scale;
    }
    softmax_inplace(dist.probs.data(), dist.probs.size());
    return dist;
}

Matrix sparse_attend_heads(const SequenceState& state, const LayerWeights& weights,
                           const AttentionConfig& config, AttnTrace* trace,
                           MacCounter* counter) {
    state.validate();
    config.validate();
    const std::size_t seq = state.seq_len();
    const std::size_t vis = state.num_vision;
    const std::size_t heads = config.num_heads;
    const std::size_t dk = config.d_k();
    const CubeLayout& layout = state.layout;
    const std::size_t c = layout.tokens_per_cube();
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    const Matrix q_all = matmul(state.embeddings, weights.wq, counter, MacScope::kProjection);
    const Matrix k_all = matmul(state.embeddings, weights.wk, counter, MacScope::kProjection);
    const Matrix v_all = matmul(state.embeddings, weights.wv, counter, MacScope::kProjection);

    std::vector<std::size_t> positions(seq);
    std::iota(positions.begin(), positions.end(), std::size_t{0});

    if (trace != nullptr) {
        trace->reset(seq, heads, layout.num_cubes(), seq - vis);
    }

    Matrix concat(seq, config.d_model);
    std::vector<double> scores;
    std::vector<double> head_out(dk);
    for (std::size_t h = 0; h < heads; ++h) {
        const Matrix qh = apply_rope(head_slice(q_all, h, dk), positions);
        const Matrix kh = apply_rope(head_slice(k_all, h, dk), positions);
        const Matrix vh = head_slice(v_all, h, dk);
        const MatrixView kh_view(kh);
        const MatrixView vh_view(vh);
        const Matrix means = mean_keys(kh_view.row_range(0, vis), layout);
        const MatrixView means_view(means);

        for (std::size_t g = 0; g < seq; ++g) {
            const double* q = qh.row(g);
            // Candidate cubes: those preceding the query's own cube for a
            // vision query, every vision cube for a text query.
            std::size_t candidates;
            std::size_t local_begin;
            if (g < vis) {
                const std::size_t cube = layout.cube_of(g);
                candidates = cube;
                local_begin = layout.cube_range(cube).begin;
            } else {
                candidates = layout.num_cubes();
                local_begin = vis;
            }
            const SelectionDistribution dist =
                cube_relevance(q, means_view.row_range(0, candidates), counter);
            const SelectedSet sel = select(dist, config.strategy);

            const std::size_t local_len = g - local_begin + 1;
            const std::size_t total = sel.count() * c + local_len;
            scores.resize(total);

            // Scores over selected cubes (ascending cube index), then the
            // local causal prefix. Cube-major ordering keeps this sequence
            // position-ascending, matching the dense reference exactly.
            std::size_t offset = 0;
            for (std::size_t cube : sel.indices) {
                const auto range = layout.cube_range(cube);
                dots_into(q, kh_view.row_range(range.begin, range.end), scores.data() + offset,
                          counter, MacScope::kAttnSelected);
                offset += c;
            }
            dots_into(q, kh_view.row_range(local_begin, g + 1), scores.data() + offset, counter,
                      MacScope::kAttnLocal);

            for (double& s : scores) {
                s *= inv_sqrt_dk;
            }
            softmax_inplace(scores.data(), total);

            std::fill(head_out.begin(), head_out.end(), 0.0);
            offset = 0;
            for (std::size_t cube : sel.indices) {
                const auto range = layout.cube_range(cube);
                matvec_acc(scores.data() + offset, vh_view.row_range(range.begin, range.end),
                           head_out.data(), counter, MacScope::kAttnSelected);
                offset += c;
            }
            matvec_acc(scores.data() + offset, vh_view.row_range(local_begin, g + 1),
                       head_out.data(), counter, MacScope::kAttnLocal);

            double* dst = concat.row(g) + h * dk;
            for (std::size_t j = 0; j < dk; ++j) {
                dst[j] = head_out[j];
            }

            if (trace != nullptr) {
                trace->selected_count[g * heads + h] = static_cast<std::uint32_t>(sel.count());
                trace->attended_count[g * heads + h] = static_cast<std::uint32_t>(total);
                if (g >= vis) {
                    for (std::size_t cube : sel.indices) {
                        ++trace->text_cube_hits[cube];
                    }
                }
            }
        }
    }
    return concat;
}

Matrix sparse_attend(const SequenceState& state, const LayerWeights& weights,
                     const AttentionConfig& config, AttnTrace* trace, MacCounter* counter) {
    const Matrix concat = sparse_attend_heads(state, weights, config, trace, counter);
    return matmul(concat, weights.wo, counter, MacScope::kProjection);
}

}  // namespace adaspark
