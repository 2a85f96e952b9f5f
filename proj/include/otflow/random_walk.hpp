#pragma once

#include "otflow/core.hpp"

namespace otflow {

inline constexpr int kInfiniteSteps = -1;  // closed-form mode

struct RandomWalkParams {
    double theta_r = 0.75;     // meters; affinity width
    double alpha = 0.5;        // restart damping
    int steps = kInfiniteSteps;
};

using TransitionMatrix = Matrix;  // row-stochastic

/// W_ij = exp(-|a_i - b_j|^2 / (2 theta_r^2)); symmetric with unit diagonal
/// when both point lists coincide.
Matrix affinity(const std::vector<Vec3>& points_a, const std::vector<Vec3>& points_b,
                double theta_r);

/// Zero the diagonal and normalize each row by its off-diagonal sum. Throws
/// std::runtime_error on an isolated node (zero off-diagonal row sum —
/// signals fewer than two labeled points or a pathological theta_r).
TransitionMatrix transition_undirected(const Matrix& affinity_matrix);

/// Row-normalize a rectangular (unlabeled x labeled) affinity block over all
/// columns; the node sets are disjoint, so there is no self-loop to exclude.
TransitionMatrix transition_directed(const Matrix& affinity_matrix);

/// t damped propagation steps: D <- alpha * A * D + (1 - alpha) * D0.
FlowField refine_iterative(const TransitionMatrix& a1, const FlowField& d0, double alpha, int t);

/// Infinite-step limit (1 - alpha) * (I - alpha*A)^-1 * D0, computed as a
/// linear solve (LU), never an explicit inverse. Requires 0 <= alpha < 1 and
/// n <= 8192 (dense solve budget).
FlowField refine_closed_form(const TransitionMatrix& a1, const FlowField& d0, double alpha);

/// Labels for unlabeled points: A2 * refined.
FlowField propagate_directed(const TransitionMatrix& a2, const FlowField& refined);

/// KNN-average baseline: each label becomes the unweighted mean over its k
/// nearest points' labels (self included). Throws when k exceeds the point
/// count or k == 0.
FlowField naive_smooth(const std::vector<Vec3>& points, const FlowField& labels, std::size_t k);

namespace serial {
Matrix affinity(const std::vector<Vec3>& points_a, const std::vector<Vec3>& points_b,
                double theta_r);
FlowField naive_smooth(const std::vector<Vec3>& points, const FlowField& labels, std::size_t k);
}  // namespace serial

}  // namespace otflow
