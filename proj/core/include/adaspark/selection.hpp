// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "adaspark/errors.hpp"
#include "adaspark/kernels.hpp"

namespace adaspark {

enum class DistributionSource {
    kCubeRelevance,    // relevance of preceding cubes to a query
    kTokenImportance,  // per-token L2-norm importance inside a cube
};

// Probability vector over candidate cubes or tokens. Entries are
// non-negative and sum to 1 when non-empty.
struct SelectionDistribution {
    Vector probs;
    DistributionSource source = DistributionSource::kCubeRelevance;

    std::size_t size() const { return probs.size(); }
    bool empty() const { return probs.empty(); }
};

// Result of a selection pass: unique indices in ascending order plus the
// cumulative probability mass they cover.
struct SelectedSet {
    std::vector<std::size_t> indices;
    double mass = 0.0;

    std::size_t count() const { return indices.size(); }
    bool contains(std::size_t idx) const;
};

struct SelectionStrategy {
    enum class Kind { kTopP, kTopK, kUniform };

    Kind kind = Kind::kTopP;
    double p = 0.7;      // kTopP: threshold in (0, 1]
    std::size_t k = 1;   // kTopK: number of indices
    double ratio = 1.0;  // kUniform: fraction of indices in (0, 1]

    static SelectionStrategy top_p(double p);
    static SelectionStrategy top_k(std::size_t k);
    static SelectionStrategy uniform(double ratio);

    void validate() const;  // throws ConfigError on out-of-range parameters
};

// Boundary handling at the cumulative threshold. The element that crosses p
// is included, which guarantees a non-empty selection for every p > 0 (the
// FFN path needs at least one activated token for mean compensation).
// kExclusive exists only for fault injection in the verification suite.
enum class TopPBoundary { kInclusive, kExclusive };

// Nucleus selection: the minimal-cardinality prefix of the
// descending-probability ordering whose cumulative mass reaches p. Ties
// between equal probabilities break by ascending original index. p >= 1
// selects every index. An empty distribution yields an empty set.
SelectedSet top_p(const SelectionDistribution& dist, double p,
                  TopPBoundary boundary = TopPBoundary::kInclusive);

// The min(k, n) largest-probability indices, ties by ascending index.
SelectedSet top_k(const SelectionDistribution& dist, std::size_t k);

// ceil(ratio * n) indices at evenly spaced positions floor(i*n/m),
// independent of any probabilities. mass is left at 0; use select() to get
// the covered mass of a concrete distribution.
SelectedSet uniform_sample(std::size_t n, double ratio);

// Dispatch on the configured strategy; fills mass from dist in every case.
SelectedSet select(const SelectionDistribution& dist, const SelectionStrategy& strategy);

}  // namespace adaspark
