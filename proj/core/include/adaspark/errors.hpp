// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace adaspark {

// Invalid user-facing configuration (bad shapes, thresholds, flags).
// The CLI maps this to exit status 2.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Inconsistent operand shapes inside the numeric layer.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace adaspark
