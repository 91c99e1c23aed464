// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0
//
// The brute-force oracle here recomputes projections, rotary encoding,
// mean keys, relevance, nucleus selection and masked softmax from scratch
// with scalar loops, sharing no code with the implementation path.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adaspark/dense_reference.hpp"
#include "adaspark/sparse_attention.hpp"
#include "support.hpp"

using namespace adaspark;
using test::make_state;
using test::max_abs_diff;

namespace {

// ---- scalar oracle ------------------------------------------------------

Matrix oracle_project(const Matrix& x, const Matrix& w) {
    Matrix out(x.rows, w.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < w.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < x.cols; ++k) {
                acc += x.at(i, k) * w.at(k, j);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

void oracle_rope_row(double* row, std::size_t dim, std::size_t pos) {
    for (std::size_t i = 0; i < dim; i += 2) {
        const double angle =
            static_cast<double>(pos) *
            std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double v0 = row[i];
        const double v1 = row[i + 1];
        row[i] = v0 * c - v1 * s;
        row[i + 1] = v0 * s + v1 * c;
    }
}

std::vector<double> oracle_softmax(std::vector<double> v) {
    if (v.empty()) {
        return v;
    }
    double hi = v[0];
    for (double x : v) {
        hi = std::max(hi, x);
    }
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - hi);
        sum += x;
    }
    for (double& x : v) {
        x /= sum;
    }
    return v;
}

std::vector<std::size_t> oracle_top_p(const std::vector<double>& probs, double p) {
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&probs](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    std::vector<std::size_t> picked;
    if (p >= 1.0) {
        for (std::size_t idx : order) {
            if (probs[idx] > 0.0) {
                picked.push_back(idx);
            }
        }
        if (picked.empty()) {
            picked = order;
        }
    } else {
        double cum = 0.0;
        for (std::size_t idx : order) {
            picked.push_back(idx);
            cum += probs[idx];
            if (cum >= p - 1e-12) {
                break;
            }
        }
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

Matrix oracle_sparse_attention(const SequenceState& state, const LayerWeights& weights,
                               std::size_t heads, double p) {
    const std::size_t seq = state.seq_len();
    const std::size_t vis = state.num_vision;
    const std::size_t d_model = state.embeddings.cols;
    const std::size_t dk = d_model / heads;
    const CubeLayout& layout = state.layout;
    const std::size_t n_cubes = layout.num_cubes();
    const std::size_t c = layout.tokens_per_cube();

    const Matrix q_all = oracle_project(state.embeddings, weights.wq);
    const Matrix k_all = oracle_project(state.embeddings, weights.wk);
    const Matrix v_all = oracle_project(state.embeddings, weights.wv);

    Matrix concat(seq, d_model);
    for (std::size_t h = 0; h < heads; ++h) {
        // per-head rotary copies
        Matrix qh(seq, dk), kh(seq, dk), vh(seq, dk);
        for (std::size_t r = 0; r < seq; ++r) {
            for (std::size_t j = 0; j < dk; ++j) {
                qh.at(r, j) = q_all.at(r, h * dk + j);
                kh.at(r, j) = k_all.at(r, h * dk + j);
                vh.at(r, j) = v_all.at(r, h * dk + j);
            }
            oracle_rope_row(qh.row(r), dk, r);
            oracle_rope_row(kh.row(r), dk, r);
        }

        Matrix means(n_cubes, dk);
        for (std::size_t cube = 0; cube < n_cubes; ++cube) {
            const auto range = layout.cube_range(cube);
            for (std::size_t r = range.begin; r < range.end; ++r) {
                for (std::size_t j = 0; j < dk; ++j) {
                    means.at(cube, j) += kh.at(r, j);
                }
            }
            for (std::size_t j = 0; j < dk; ++j) {
                means.at(cube, j) /= static_cast<double>(c);
            }
        }

        for (std::size_t g = 0; g < seq; ++g) {
            const std::size_t candidates = g < vis ? layout.cube_of(g) : n_cubes;
            const std::size_t local_begin =
                g < vis ? layout.cube_range(layout.cube_of(g)).begin : vis;

            std::vector<double> logits(candidates);
            for (std::size_t j = 0; j < candidates; ++j) {
                double acc = 0.0;
                for (std::size_t t = 0; t < dk; ++t) {
                    acc += qh.at(g, t) * means.at(j, t);
                }
                logits[j] = acc / std::sqrt(static_cast<double>(dk));
            }
            const std::vector<std::size_t> cubes = oracle_top_p(oracle_softmax(logits), p);

            std::vector<std::size_t> attended;
            for (std::size_t cube : cubes) {
                const auto range = layout.cube_range(cube);
                for (std::size_t r = range.begin; r < range.end; ++r) {
                    attended.push_back(r);
                }
            }
            for (std::size_t r = local_begin; r <= g; ++r) {
                attended.push_back(r);
            }

            std::vector<double> scores(attended.size());
            for (std::size_t a = 0; a < attended.size(); ++a) {
                double acc = 0.0;
                for (std::size_t t = 0; t < dk; ++t) {
                    acc += qh.at(g, t) * kh.at(attended[a], t);
                }
                scores[a] = acc / std::sqrt(static_cast<double>(dk));
            }
            const std::vector<double> w = oracle_softmax(scores);
            for (std::size_t a = 0; a < attended.size(); ++a) {
                for (std::size_t t = 0; t < dk; ++t) {
                    concat.at(g, h * dk + t) += w[a] * vh.at(attended[a], t);
                }
            }
        }
    }
    return oracle_project(concat, weights.wo);
}

AttentionConfig attn_config(std::size_t heads, std::size_t d_model, double p) {
    AttentionConfig c;
    c.num_heads = heads;
    c.d_model = d_model;
    c.strategy = SelectionStrategy::top_p(p);
    return c;
}

}  // namespace

TEST_CASE("mean_keys: identical keys, hand average, naive oracle") {
    const CubeLayout pair_layout = CubeLayout::partition({2, 1, 1}, {1, 1, 2});
    Matrix keys(2, 2);
    keys.data = {1.0, 0.0, 0.0, 1.0};
    const Matrix mean = mean_keys(keys, pair_layout);
    CHECK(mean.at(0, 0) == 0.5);
    CHECK(mean.at(0, 1) == 0.5);

    Matrix same(2, 2);
    same.data = {0.3, -0.7, 0.3, -0.7};
    const Matrix mean_same = mean_keys(same, pair_layout);
    CHECK(mean_same.at(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(mean_same.at(0, 1) == doctest::Approx(-0.7).epsilon(1e-15));

    const CubeLayout layout8 = CubeLayout::partition({2, 2, 2}, {2, 2, 2});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix random_keys(8, 4);
    for (double& v : random_keys.data) {
        v = dist(rng);
    }
    const Matrix got = mean_keys(random_keys, layout8);
    for (std::size_t j = 0; j < 4; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < 8; ++r) {
            acc += random_keys.at(r, j);
        }
        CHECK(got.at(0, j) == doctest::Approx(acc / 8.0).epsilon(1e-12));
    }
}

TEST_CASE("cube_relevance: single cube, orthogonal query, scalar oracle") {
    Matrix means(1, 4);
    means.data = {0.2, -0.1, 0.4, 0.9};
    const Vector q_any = {1.0, 2.0, 3.0, 4.0};
    const SelectionDistribution one = cube_relevance(q_any.data(), means);
    REQUIRE(one.size() == 1);
    CHECK(one.probs[0] == 1.0);

    // A query orthogonal to every mean key scores uniformly.
    Matrix two(2, 4);
    two.data = {1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0};
    const Vector orth = {0.0, 0.0, 5.0, -2.0};
    const SelectionDistribution uniform = cube_relevance(orth.data(), two);
    CHECK(uniform.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(uniform.probs[1] == doctest::Approx(0.5).epsilon(1e-12));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix three(3, 4);
    Vector q(4);
    for (double& v : three.data) {
        v = dist(rng);
    }
    for (double& v : q) {
        v = dist(rng);
    }
    const SelectionDistribution got = cube_relevance(q.data(), three);
    std::vector<double> logits(3);
    for (std::size_t j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < 4; ++t) {
            acc += q[t] * three.at(j, t);
        }
        logits[j] = acc / 2.0;  // sqrt(4)
    }
    const std::vector<double> expected = oracle_softmax(logits);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(got.probs[j] == doctest::Approx(expected[j]).epsilon(1e-12));
    }

    // Empty candidate set (first cube) yields the empty distribution.
    CHECK(cube_relevance(q.data(), MatrixView(three).row_range(0, 0)).empty());
}

TEST_CASE("sparse_attend: p=1 degenerates to the dense causal oracle") {
    const SequenceState state = make_state(5, {4, 4, 4}, {2, 2, 2}, 12, 32);
    const LayerWeights weights = LayerWeights::seeded(32, 64, 606);
    const Matrix sparse = sparse_attend(state, weights, attn_config(2, 32, 1.0));
    const Matrix dense = dense_attend(state, weights, attn_config(2, 32, 1.0));
    CHECK(max_rel_error(sparse, dense) < 1e-9);
}

TEST_CASE("sparse_attend: single-cube sequence has only the local path") {
    const SequenceState state = make_state(6, {2, 4, 4}, {4, 4, 2}, 0, 32);
    REQUIRE(state.layout.num_cubes() == 1);
    const LayerWeights weights = LayerWeights::seeded(32, 64, 607);
    for (double p : {0.3, 0.7, 1.0}) {
        const Matrix sparse = sparse_attend(state, weights, attn_config(2, 32, p));
        const Matrix dense = dense_attend(state, weights, attn_config(2, 32, p));
        CHECK(max_rel_error(sparse, dense) < 1e-9);
    }
}

TEST_CASE("sparse_attend: matches the brute-force per-query oracle at p=0.7") {
    // 512 vision tokens in 64-token cubes, with and without a text tail.
    for (std::size_t text : {std::size_t{0}, std::size_t{16}}) {
        const SequenceState state = make_state(42, {8, 8, 8}, {4, 4, 4}, text, 64);
        REQUIRE(state.num_vision == 512);
        const LayerWeights weights = LayerWeights::seeded(64, 128, 4242);
        const Matrix got = sparse_attend(state, weights, attn_config(4, 64, 0.7));
        const Matrix expected = oracle_sparse_attention(state, weights, 4, 0.7);
        CHECK(max_rel_error(got, expected) < 1e-9);
    }
}

TEST_CASE("sparse_attend: causality is exact under future perturbation") {
    const SequenceState state = make_state(9, {4, 4, 4}, {2, 2, 2}, 8, 32);
    const LayerWeights weights = LayerWeights::seeded(32, 64, 608);
    const AttentionConfig config = attn_config(2, 32, 0.7);
    const Matrix base = sparse_attend(state, weights, config);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t target = 1 + rng() % (state.seq_len() - 1);
        SequenceState perturbed = state;
        for (std::size_t j = 0; j < perturbed.embeddings.cols; ++j) {
            perturbed.embeddings.at(target, j) += 1.5;
        }
        const Matrix out = sparse_attend(perturbed, weights, config);
        for (std::size_t g = 0; g < target; ++g) {
            for (std::size_t j = 0; j < out.cols; ++j) {
                REQUIRE(out.at(g, j) == base.at(g, j));
            }
        }
    }
}

TEST_CASE("sparse_attend: local-cube guarantee and selected-set bound") {
    const SequenceState state = make_state(10, {4, 8, 8}, {4, 4, 2}, 10, 32);
    const LayerWeights weights = LayerWeights::seeded(32, 64, 609);
    for (const SelectionStrategy& strategy :
         {SelectionStrategy::top_p(0.3), SelectionStrategy::top_p(0.9),
          SelectionStrategy::top_k(2), SelectionStrategy::uniform(0.5)}) {
        AttentionConfig config = attn_config(2, 32, 0.7);
        config.strategy = strategy;
        AttnTrace trace;
        sparse_attend(state, weights, config, &trace);
        const std::size_t c = state.layout.tokens_per_cube();
        for (std::size_t g = 0; g < state.seq_len(); ++g) {
            for (std::size_t h = 0; h < 2; ++h) {
                const std::size_t selected = trace.selected(g, h);
                const std::size_t attended = trace.attended(g, h);
                if (g < state.num_vision) {
                    const std::size_t cube = state.layout.cube_of(g);
                    const std::size_t offset = g - state.layout.cube_range(cube).begin;
                    CHECK(selected <= cube);
                    // Attended set is exactly the selected cubes plus the
                    // local causal prefix (self included).
                    CHECK(attended == selected * c + offset + 1);
                } else {
                    CHECK(selected <= state.layout.num_cubes());
                    CHECK(attended == selected * c + (g - state.num_vision) + 1);
                }
            }
        }
    }
}

TEST_CASE("sparse_attend: first-cube queries select nothing") {
    const SequenceState state = make_state(11, {4, 4, 4}, {2, 2, 2}, 0, 32);
    const LayerWeights weights = LayerWeights::seeded(32, 64, 610);
    AttnTrace trace;
    sparse_attend(state, weights, attn_config(2, 32, 0.7), &trace);
    const auto first = state.layout.cube_range(0);
    for (std::size_t g = first.begin; g < first.end; ++g) {
        for (std::size_t h = 0; h < 2; ++h) {
            CHECK(trace.selected(g, h) == 0);
        }
    }
}

TEST_CASE("sparse_attend: head independence before the output projection") {
    const SequenceState state = make_state(12, {2, 4, 4}, {2, 2, 2}, 6, 32);
    LayerWeights weights = LayerWeights::seeded(32, 64, 611);
    const AttentionConfig config = attn_config(4, 32, 0.7);
    const Matrix base = sparse_attend_heads(state, weights, config);

    const std::size_t dk = config.d_k();
    const std::size_t zapped = 2;
    for (Matrix* w : {&weights.wq, &weights.wk, &weights.wv}) {
        for (std::size_t r = 0; r < w->rows; ++r) {
            for (std::size_t j = zapped * dk; j < (zapped + 1) * dk; ++j) {
                w->at(r, j) = 0.0;
            }
        }
    }
    const Matrix changed = sparse_attend_heads(state, weights, config);
    for (std::size_t g = 0; g < state.seq_len(); ++g) {
        for (std::size_t j = 0; j < 32; ++j) {
            if (j / dk == zapped) {
                continue;  // this head's slice is allowed to change
            }
            CHECK(changed.at(g, j) == base.at(g, j));
        }
    }
}

TEST_CASE("attn trace: text selection frequencies") {
    const SequenceState state = make_state(13, {4, 4, 4}, {2, 2, 2}, 10, 32);
    const LayerWeights weights = LayerWeights::seeded(32, 64, 612);
    AttnTrace trace;
    sparse_attend(state, weights, attn_config(2, 32, 0.7), &trace);
    const std::vector<double> freq = trace.text_cube_freq();
    REQUIRE(freq.size() == state.layout.num_cubes());
    for (double f : freq) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }

    const SequenceState no_text = make_state(13, {4, 4, 4}, {2, 2, 2}, 0, 32);
    AttnTrace empty_trace;
    sparse_attend(no_text, weights, attn_config(2, 32, 0.7), &empty_trace);
    CHECK(empty_trace.text_cube_freq().empty());
}

TEST_CASE("sparse_attend: deterministic counters across repeated runs") {
    const SequenceState state = make_state(14, {2, 4, 4}, {2, 2, 2}, 4, 32);
    const LayerWeights weights = LayerWeights::seeded(32, 64, 613);
    MacCounter a, b;
    sparse_attend(state, weights, attn_config(2, 32, 0.7), nullptr, &a);
    sparse_attend(state, weights, attn_config(2, 32, 0.7), nullptr, &b);
    CHECK(a.attn_selected == b.attn_selected);
    CHECK(a.attn_local == b.attn_local);
    CHECK(a.projection == b.projection);
    CHECK(a.overhead == b.overhead);
}
