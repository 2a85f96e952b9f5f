#pragma once

#include "otflow/core.hpp"

namespace otflow {

inline constexpr std::size_t kDefaultNormalNeighbors = 16;

/// PCA plane-fit result for one point's neighborhood.
struct NormalEstimate {
    Vec3 normal = Vec3::Zero();
    bool valid = false;
    std::size_t neighborhood_size = 0;
};

/// Indices of the k nearest points to `query` by Euclidean distance,
/// ascending; ties break to the lower index. Exact (matches brute force).
/// Throws std::invalid_argument when k exceeds the point count.
std::vector<std::size_t> knn_indices(const std::vector<Vec3>& points, const Vec3& query,
                                     std::size_t k);
std::vector<std::size_t> knn_indices(const PointCloud& cloud, const Vec3& query, std::size_t k);

/// Per-point normals from the smallest-eigenvalue eigenvector of the
/// k-nearest-neighbor covariance (the query point is its own nearest
/// neighbor). Sign is arbitrary. Flagged invalid when the neighborhood is
/// near-isotropic (smallest/largest eigenvalue ratio > 0.9) or collinear.
std::vector<NormalEstimate> compute_normal_estimates(const PointCloud& cloud, std::size_t k);

/// Returns a copy of the cloud with estimated normals and validity attached.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k = kDefaultNormalNeighbors);

namespace serial {
// Single-threaded reference; must match the parallel path bitwise.
std::vector<NormalEstimate> compute_normal_estimates(const PointCloud& cloud, std::size_t k);
}  // namespace serial

}  // namespace otflow
