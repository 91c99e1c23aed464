// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "adaspark/errors.hpp"

namespace adaspark {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit reals. 64-bit throughout keeps the
// oracle tolerances in the test suites tight.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows * cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Non-owning view over a contiguous block of rows.
struct MatrixView {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    MatrixView() = default;
    MatrixView(const double* d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {}
    MatrixView(const Matrix& m) : data(m.data.data()), rows(m.rows), cols(m.cols) {}

    const double* row(std::size_t i) const { return data + i * cols; }

    // View of rows [begin, end).
    MatrixView row_range(std::size_t begin, std::size_t end) const {
        return MatrixView(data + begin * cols, end - begin, cols);
    }
};

// Multiply-accumulate categories. The attention and FFN categories carry a
// finer split than the reporting totals so the cost model can reconcile the
// selected-cube and activated-token terms against the analytical formulas.
enum class MacScope {
    kAttnDense,     // QK^T / AV of the dense causal reference
    kAttnSelected,  // QK^T / AV over selected sparse cubes
    kAttnLocal,     // QK^T / AV over the local causal prefix (and dense text-to-text)
    kFfnVision,     // up/down projections of vision rows
    kFfnText,       // up/down projections of text rows
    kProjection,    // Q/K/V/O projections (paid identically by both paths)
    kOverhead,      // selection arithmetic (mean-key dot products)
};

// Running multiply-accumulate counts, one MAC = 2 FLOPs. Counts are only
// incremented inside the matmul kernels. The counter is not shared across
// threads; parallel callers accumulate into private counters and merge().
struct MacCounter {
    std::uint64_t attn_dense = 0;
    std::uint64_t attn_selected = 0;
    std::uint64_t attn_local = 0;
    std::uint64_t ffn_vision = 0;
    std::uint64_t ffn_text = 0;
    std::uint64_t projection = 0;
    std::uint64_t overhead = 0;

    void add(MacScope scope, std::uint64_t macs);
    void merge(const MacCounter& other);

    std::uint64_t attention_macs() const { return attn_dense + attn_selected + attn_local; }
    std::uint64_t ffn_macs() const { return ffn_vision + ffn_text; }
    std::uint64_t projection_macs() const { return projection; }
    std::uint64_t overhead_macs() const { return overhead; }
    std::uint64_t total_macs() const {
        return attention_macs() + ffn_macs() + projection + overhead;
    }
};

// c = a * b. Increments counter by a.rows * a.cols * b.cols MACs.
Matrix matmul(const MatrixView& a, const MatrixView& b,
              MacCounter* counter = nullptr, MacScope scope = MacScope::kOverhead);

// c = a * b^T with b stored row-major (rows of b are the right-hand
// columns). Same MAC count as the equivalent matmul.
Matrix matmul_nt(const MatrixView& a, const MatrixView& b,
                 MacCounter* counter = nullptr, MacScope scope = MacScope::kOverhead);

// Single-row kernels with caller-provided output, used by the per-query
// attention loops to avoid temporaries. Both count MACs like the matrix
// forms above.

// out[j] = dot(a, b.row(j)); a has b.cols entries, out has b.rows entries.
void dots_into(const double* a, const MatrixView& b, double* out,
               MacCounter* counter = nullptr, MacScope scope = MacScope::kOverhead);

// acc += a * b for a single row vector a of b.rows entries; acc has b.cols.
void matvec_acc(const double* a, const MatrixView& b, double* acc,
                MacCounter* counter = nullptr, MacScope scope = MacScope::kOverhead);

// Numerically stable softmax (max subtraction). Empty input yields an
// empty result; that case is meaningful for the first cube, which has no
// preceding cubes to score.
Vector softmax(const Vector& logits);

// In-place variant shared by the attention inner loops.
void softmax_inplace(double* x, std::size_t n);

double l2_norm(const double* x, std::size_t n);
double l2_norm(const Vector& x);

// Rotary positional encoding over adjacent feature pairs, base 10000.
// positions.size() must equal the number of rows; the feature dimension
// must be even. Rotations preserve each row's L2 norm.
Matrix apply_rope(const Matrix& q_or_k, const std::vector<std::size_t>& positions,
                  double base = 10000.0);

// max_ij |a - b| scaled by the largest magnitude of the reference.
double max_rel_error(const Matrix& a, const Matrix& reference);

}  // namespace adaspark
