#pragma once

#include "otflow/core.hpp"
#include "otflow/cost.hpp"

namespace otflow {

struct SinkhornParams {
    enum class Mode { automatic, direct, log_domain };

    double epsilon = 0.03;        // entropic regularization; ~1% of the [0,3] cost range
    int max_iterations = 100;     // L_o
    double marginal_tolerance = 1e-9;
    Mode mode = Mode::automatic;  // automatic: log domain when eps < 0.01 or exp(-C/eps) underflows
};

struct TransportPlan {
    Matrix entries;       // n_row x n_col, nonnegative
    Vector row_scaling;   // a
    Vector col_scaling;   // b
    double row_residual = 0.0;  // max-norm row-sum mismatch vs mu_row
    double col_residual = 0.0;
    int iterations = 0;
    bool used_log_domain = false;
};

/// Entropy-regularized transport with the classic scaling iteration:
/// K = exp(-C/eps), then alternate b <- mu_col / (K^T a), a <- mu_row / (K b)
/// until both marginal residuals drop below marginal_tolerance or
/// max_iterations is hit. Empty marginal arguments mean uniform. The direct
/// iteration throws std::runtime_error (naming epsilon) when scaling hits a
/// zero denominator; the log-domain path avoids that and matches the direct
/// path to ~1e-10.
TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornParams& params,
                       const Vector& mu_row = Vector(), const Vector& mu_col = Vector());

/// Row argmax of the plan (ties -> lowest column); is_valid all true.
CorrespondenceSet harden(const TransportPlan& plan);

/// Per-row transport-weighted barycenter of target positions. Throws
/// std::runtime_error on a zero row sum.
std::vector<Vec3> soft_match(const TransportPlan& plan, const PointCloud& target);

/// labels[i] = target[corr[i]] - source[i]; valid iff the correspondence is
/// valid and the label norm is <= max_displacement. `source` must be the
/// original (un-warped) first cloud — displacement is measured against it
/// even when the matching ran on a pre-warped copy.
PseudoLabelSet extract_labels(const PointCloud& source, const PointCloud& target,
                              const CorrespondenceSet& corr, double max_displacement);

/// Unconstrained per-row cost argmin (nearest-by-cost baseline, many-to-one
/// allowed); ties -> lowest column.
CorrespondenceSet greedy_search(const CostMatrix& cost);

}  // namespace otflow
