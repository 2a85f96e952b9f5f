#pragma once

#include "otflow/core.hpp"
#include "otflow/cost.hpp"

namespace otflow {

struct AssignmentResult {
    CorrespondenceSet correspondence;  // a permutation; is_valid all true
    double total_cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// O(n^3)). Verification oracle only — capped at n <= 64 and never called by
/// the labeling pipeline. Throws std::invalid_argument on non-square input or
/// n outside [1, 64].
AssignmentResult exact_assignment(const CostMatrix& cost);

/// Brute force over all n! permutations, n <= 8. Reference for hardening the
/// Hungarian solver; ties resolve to the lexicographically smallest
/// permutation.
AssignmentResult exhaustive_assignment(const CostMatrix& cost);

}  // namespace otflow
