// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace adaspark {

// Test-only mutations used to prove the suite can fail. kToppBoundary
// flips the nucleus boundary rule from inclusive to exclusive, which must
// trip the top-p oracle and coverage properties.
enum class InjectedFault { kNone, kToppBoundary };

struct CheckResult {
    std::string name;
    bool passed = false;
    std::vector<std::string> notes;
};

// Runs the oracle-equivalence and property suite behind the acceptance
// gate and the CLI verify subcommand. Every check runs regardless of
// earlier failures.
std::vector<CheckResult> run_verification(InjectedFault fault = InjectedFault::kNone);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace adaspark
