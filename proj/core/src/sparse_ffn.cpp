// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/sparse_ffn.hpp"

#include <numeric>

namespace adaspark {

void FfnTrace::reset(std::size_t vision, std::size_t cubes, std::size_t seq) {
    num_vision = vision;
    keep_ratio.assign(cubes, 0.0);
    activated.assign(cubes, 0);
    norm_ratio.assign(seq, 0.0);
}

double FfnTrace::mean_keep_ratio() const {
    if (keep_ratio.empty()) {
        return 0.0;
    }
    return std::accumulate(keep_ratio.begin(), keep_ratio.end(), 0.0) /
           static_cast<double>(keep_ratio.size());
}

std::uint64_t FfnTrace::activated_total() const {
    return std::accumulate(activated.begin(), activated.end(), std::uint64_t{0});
}

double FfnTrace::activation_ratio() const {
    if (num_vision == 0) {
        return 0.0;
    }
    return static_cast<double>(activated_total()) / static_cast<double>(num_vision);
}

SelectionDistribution importance(const MatrixView& cube_embeddings, double epsilon) {
    SelectionDistribution dist;
    dist.source = DistributionSource::kTokenImportance;
    const std::size_t n = cube_embeddings.rows;
    dist.probs.resize(n);
    double norm_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dist.probs[i] = l2_norm(cube_embeddings.row(i), cube_embeddings.cols);
        norm_sum += dist.probs[i];
    }
    const double denom = norm_sum + epsilon;
    double total = 0.0;
    for (double& v : dist.probs) {
        v /= denom;
        total += v;
    }
    if (total > 0.0) {
        for (double& v : dist.probs) {
            v /= total;
        }
    } else if (n > 0) {
        // Degenerate cube of all-zero tokens carries no importance signal.
        const double uniform = 1.0 / static_cast<double>(n);
        for (double& v : dist.probs) {
            v = uniform;
        }
    }
    return dist;
}

Matrix sparse_ffn(const SequenceState& state, const LayerWeights& weights,
                  const FfnConfig& config, FfnTrace* trace, MacCounter* counter) {
    state.validate();
    config.validate();
    const std::size_t seq = state.seq_len();
    const std::size_t vis = state.num_vision;
    const std::size_t d = config.d_model;
    const CubeLayout& layout = state.layout;
    const std::size_t c = layout.tokens_per_cube();

    const Matrix normed = rms_norm(state.embeddings, weights.ffn_norm_gain);
    const MatrixView normed_view(normed);

    if (trace != nullptr) {
        trace->reset(vis, layout.num_cubes(), seq);
    }

    Matrix out = state.embeddings;  // residual base

    Matrix gathered;
    for (std::size_t cube = 0; cube < layout.num_cubes(); ++cube) {
        const auto range = layout.cube_range(cube);
        const SelectionDistribution dist =
            importance(normed_view.row_range(range.begin, range.end), config.epsilon);
        const SelectedSet sel = select(dist, config.strategy);
        const std::size_t m = sel.count();

        gathered = Matrix(m, d);
        for (std::size_t r = 0; r < m; ++r) {
            const double* src = normed.row(range.begin + sel.indices[r]);
            double* dst = gathered.row(r);
            for (std::size_t j = 0; j < d; ++j) {
                dst[j] = src[j];
            }
        }
        const Matrix transformed =
            ffn_transform(gathered, weights, config, counter, MacScope::kFfnVision);

        for (std::size_t r = 0; r < m; ++r) {
            const double* src = transformed.row(r);
            double* dst = out.row(range.begin + sel.indices[r]);
            for (std::size_t j = 0; j < d; ++j) {
                dst[j] += src[j];
            }
        }

        if (m < c && config.mean_compensation) {
            // Mean transformation of the activated set, applied to every
            // bypassed token of the cube on top of its own residual.
            Vector mean(d, 0.0);
            for (std::size_t r = 0; r < m; ++r) {
                const double* src = transformed.row(r);
                for (std::size_t j = 0; j < d; ++j) {
                    mean[j] += src[j];
                }
            }
            for (double& v : mean) {
                v /= static_cast<double>(m);
            }
            std::size_t next_sel = 0;
            for (std::size_t local = 0; local < c; ++local) {
                if (next_sel < m && sel.indices[next_sel] == local) {
                    ++next_sel;
                    continue;
                }
                double* dst = out.row(range.begin + local);
                for (std::size_t j = 0; j < d; ++j) {
                    dst[j] += mean[j];
                }
            }
        }

        if (trace != nullptr) {
            trace->activated[cube] = static_cast<std::uint32_t>(m);
            trace->keep_ratio[cube] = static_cast<double>(m) / static_cast<double>(c);
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
        for (std::size_t i = 0; i < seq; ++i) {
            const double pre = l2_norm(state.embeddings.row(i), d);
            const double post = l2_norm(out.row(i), d);
            trace->norm_ratio[i] = pre > 0.0 ? post / pre : 0.0;
        }
    }
    return out;
}

}  // namespace adaspark
