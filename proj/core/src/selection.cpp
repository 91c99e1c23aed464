// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include "adaspark/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace adaspark {

namespace {

// Cumulative-threshold comparisons tolerate accumulated rounding in the
// probability prefix sums. 1e-12 is far above summation dust for the
// distribution sizes in play and far below any meaningful mass gap.
constexpr double kBoundaryEps = 1e-12;

// Indices sorted by descending probability, ties by ascending index.
std::vector<std::size_t> descending_order(const Vector& probs) {
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&probs](std::size_t a, std::size_t b) {
        if (probs[a] != probs[b]) {
            return probs[a] > probs[b];
        }
        return a < b;
    });
    return order;
}

SelectedSet finish(std::vector<std::size_t> indices, const Vector& probs) {
    std::sort(indices.begin(), indices.end());
    double mass = 0.0;
    for (std::size_t idx : indices) {
        mass += probs[idx];
    }
    return {std::move(indices), mass};
}

}  // namespace

bool SelectedSet::contains(std::size_t idx) const {
    return std::binary_search(indices.begin(), indices.end(), idx);
}

SelectionStrategy SelectionStrategy::top_p(double p) {
    SelectionStrategy s;
    s.kind = Kind::kTopP;
    s.p = p;
    return s;
}

SelectionStrategy SelectionStrategy::top_k(std::size_t k) {
    SelectionStrategy s;
    s.kind = Kind::kTopK;
    s.k = k;
    return s;
}

SelectionStrategy SelectionStrategy::uniform(double ratio) {
    SelectionStrategy s;
    s.kind = Kind::kUniform;
    s.ratio = ratio;
    return s;
}

void SelectionStrategy::validate() const {
    switch (kind) {
        case Kind::kTopP:
            if (!(p > 0.0) || p > 1.0 || !std::isfinite(p)) {
                throw ConfigError("top-p threshold must lie in (0, 1], got " + std::to_string(p));
            }
            break;
        case Kind::kTopK:
            if (k < 1) {
                throw ConfigError("top-k count must be >= 1");
            }
            break;
        case Kind::kUniform:
            if (!(ratio > 0.0) || ratio > 1.0 || !std::isfinite(ratio)) {
                throw ConfigError("uniform ratio must lie in (0, 1], got " + std::to_string(ratio));
            }
            break;
    }
}

SelectedSet top_p(const SelectionDistribution& dist, double p, TopPBoundary boundary) {
    if (!(p > 0.0) || p > 1.0 || !std::isfinite(p)) {
        throw ConfigError("top-p threshold must lie in (0, 1], got " + std::to_string(p));
    }
    if (dist.empty()) {
        return {};
    }
    const Vector& probs = dist.probs;
    // p = 1 means "keep the whole support". Selecting it explicitly keeps
    // the p = 1 path equal to the dense computation even when the prefix
    // sum saturates early from rounding; zero-probability entries stay
    // outside the minimal prefix (a one-hot distribution selects one index
    // at any p).
    if (p >= 1.0 && boundary == TopPBoundary::kInclusive) {
        std::vector<std::size_t> support;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) {
                support.push_back(i);
            }
        }
        if (!support.empty()) {
            return finish(std::move(support), probs);
        }
    }
    const std::vector<std::size_t> order = descending_order(probs);
    std::vector<std::size_t> picked;
    double cum = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (boundary == TopPBoundary::kExclusive && rank > 0 &&
            cum + probs[order[rank]] >= p - kBoundaryEps) {
            break;
        }
        picked.push_back(order[rank]);
        cum += probs[order[rank]];
        if (cum >= p - kBoundaryEps) {
            break;
        }
    }
    return finish(std::move(picked), probs);
}

SelectedSet top_k(const SelectionDistribution& dist, std::size_t k) {
    if (dist.empty() || k == 0) {
        return {};
    }
    const std::vector<std::size_t> order = descending_order(dist.probs);
    const std::size_t take = std::min(k, order.size());
    return finish({order.begin(), order.begin() + take}, dist.probs);
}

SelectedSet uniform_sample(std::size_t n, double ratio) {
    if (!(ratio > 0.0) || ratio > 1.0 || !std::isfinite(ratio)) {
        throw ConfigError("uniform ratio must lie in (0, 1], got " + std::to_string(ratio));
    }
    if (n == 0) {
        return {};
    }
    const std::size_t m = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - kBoundaryEps));
    SelectedSet out;
    out.indices.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.indices.push_back(i * n / m);
    }
    return out;
}

SelectedSet select(const SelectionDistribution& dist, const SelectionStrategy& strategy) {
    strategy.validate();
    switch (strategy.kind) {
        case SelectionStrategy::Kind::kTopP:
            return top_p(dist, strategy.p);
        case SelectionStrategy::Kind::kTopK:
            return top_k(dist, strategy.k);
        case SelectionStrategy::Kind::kUniform: {
            SelectedSet s = uniform_sample(dist.size(), strategy.ratio);
            s.mass = 0.0;
            for (std::size_t idx : s.indices) {
                s.mass += dist.probs[idx];
            }
            return s;
        }
    }
    return {};
}

}  // namespace adaspark
