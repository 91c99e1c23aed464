// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adaspark {

void MacCounter::add(MacScope scope, std::uint64_t macs) {
    switch (scope) {
        case MacScope::kAttnDense:    attn_dense += macs; break;
        case MacScope::kAttnSelected: attn_selected += macs; break;
        case MacScope::kAttnLocal:    attn_local += macs; break;
        case MacScope::kFfnVision:    ffn_vision += macs; break;
        case MacScope::kFfnText:      ffn_text += macs; break;
        case MacScope::kProjection:   projection += macs; break;
        case MacScope::kOverhead:     overhead += macs; break;
    }
}

void MacCounter::merge(const MacCounter& other) {
    attn_dense += other.attn_dense;
    attn_selected += other.attn_selected;
    attn_local += other.attn_local;
    ffn_vision += other.ffn_vision;
    ffn_text += other.ffn_text;
    projection += other.projection;
    overhead += other.overhead;
}

Matrix matmul(const MatrixView& a, const MatrixView& b, MacCounter* counter, MacScope scope) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + ")");
    }
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    if (counter != nullptr) {
        counter->add(scope, static_cast<std::uint64_t>(a.rows) * a.cols * b.cols);
    }
    return c;
}

Matrix matmul_nt(const MatrixView& a, const MatrixView& b, MacCounter* counter, MacScope scope) {
    if (a.cols != b.cols) {
        throw ShapeError("matmul_nt: inner dimensions differ (" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.cols) + ")");
    }
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            crow[j] = acc;
        }
    }
    if (counter != nullptr) {
        counter->add(scope, static_cast<std::uint64_t>(a.rows) * a.cols * b.rows);
    }
    return c;
}

void dots_into(const double* a, const MatrixView& b, double* out, MacCounter* counter,
               MacScope scope) {
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* brow = b.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < b.cols; ++k) {
            acc += a[k] * brow[k];
        }
        out[j] = acc;
    }
    if (counter != nullptr) {
        counter->add(scope, static_cast<std::uint64_t>(b.rows) * b.cols);
    }
}

void matvec_acc(const double* a, const MatrixView& b, double* acc, MacCounter* counter,
                MacScope scope) {
    for (std::size_t k = 0; k < b.rows; ++k) {
        const double ak = a[k];
        const double* brow = b.row(k);
        for (std::size_t j = 0; j < b.cols; ++j) {
            acc[j] += ak * brow[j];
        }
    }
    if (counter != nullptr) {
        counter->add(scope, static_cast<std::uint64_t>(b.rows) * b.cols);
    }
}

Vector softmax(const Vector& logits) {
    Vector out = logits;
    softmax_inplace(out.data(), out.size());
    return out;
}

void softmax_inplace(double* x, std::size_t n) {
    if (n == 0) {
        return;
    }
    double max_logit = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        max_logit = std::max(max_logit, x[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - max_logit);
        sum += x[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        x[i] /= sum;
    }
}

double l2_norm(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i] * x[i];
    }
    return std::sqrt(acc);
}

double l2_norm(const Vector& x) {
    return l2_norm(x.data(), x.size());
}

Matrix apply_rope(const Matrix& q_or_k, const std::vector<std::size_t>& positions, double base) {
    if (q_or_k.cols % 2 != 0) {
        throw ConfigError("apply_rope: head dimension must be even, got " +
                          std::to_string(q_or_k.cols));
    }
    if (positions.size() != q_or_k.rows) {
        throw ShapeError("apply_rope: positions length " + std::to_string(positions.size()) +
                         " does not match row count " + std::to_string(q_or_k.rows));
    }
    Matrix out(q_or_k.rows, q_or_k.cols);
    const std::size_t dim = q_or_k.cols;
    for (std::size_t r = 0; r < q_or_k.rows; ++r) {
        const double* src = q_or_k.row(r);
        double* dst = out.row(r);
        const double pos = static_cast<double>(positions[r]);
        for (std::size_t i = 0; i < dim; i += 2) {
            const double inv_freq = std::pow(base, -static_cast<double>(i) / static_cast<double>(dim));
            const double angle = pos * inv_freq;
            const double c = std::cos(angle);
            const double s = std::sin(angle);
            const double v0 = src[i];
            const double v1 = src[i + 1];
            dst[i] = v0 * c - v1 * s;
            dst[i + 1] = v0 * s + v1 * c;
        }
    }
    return out;
}

double max_rel_error(const Matrix& a, const Matrix& reference) {
    if (a.rows != reference.rows || a.cols != reference.cols) {
        throw ShapeError("max_rel_error: shape mismatch");
    }
    double scale = 0.0;
    for (double v : reference.data) {
        scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) {
        scale = 1.0;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        worst = std::max(worst, std::abs(a.data[i] - reference.data[i]));
    }
    return worst / scale;
}

}  // namespace adaspark
