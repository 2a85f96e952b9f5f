#include "otflow/normals.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace otflow {

namespace {

constexpr double kIsotropicRatio = 0.9;    // sphere-like neighborhood: no plane
constexpr double kDegenerateRatio = 1e-9;  // collinear neighborhood: no unique plane
constexpr double kCoincidentScale = 1e-24; // all points in one spot

NormalEstimate estimate_one(const PointCloud& cloud, std::size_t i, std::size_t k) {
    const std::vector<std::size_t> nbrs = knn_indices(cloud, cloud.positions[i], k);

    Vec3 mean = Vec3::Zero();
    for (std::size_t j : nbrs) mean += cloud.positions[j];
    mean /= static_cast<double>(nbrs.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t j : nbrs) {
        const Vec3 d = cloud.positions[j] - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(nbrs.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Vec3 lambda = eig.eigenvalues();  // ascending

    NormalEstimate est;
    est.neighborhood_size = nbrs.size();
    if (lambda(2) <= kCoincidentScale) return est;            // coincident
    if (lambda(1) / lambda(2) <= kDegenerateRatio) return est; // collinear
    if (lambda(0) / lambda(2) > kIsotropicRatio) return est;   // isotropic
    est.normal = eig.eigenvectors().col(0).normalized();
    est.valid = true;
    return est;
}

}  // namespace

std::vector<std::size_t> knn_indices(const std::vector<Vec3>& points, const Vec3& query,
                                     std::size_t k) {
    const std::size_t n = points.size();
    if (k == 0) throw std::invalid_argument("knn_indices: k must be positive");
    if (k > n) throw std::invalid_argument("knn_indices: k exceeds point count");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto closer = [&](std::size_t a, std::size_t b) {
        const double da = (points[a] - query).squaredNorm();
        const double db = (points[b] - query).squaredNorm();
        if (da != db) return da < db;
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      closer);
    order.resize(k);
    return order;
}

std::vector<std::size_t> knn_indices(const PointCloud& cloud, const Vec3& query, std::size_t k) {
    return knn_indices(cloud.positions, query, k);
}

std::vector<NormalEstimate> compute_normal_estimates(const PointCloud& cloud, std::size_t k) {
    const std::size_t n = cloud.size();
    if (k > n) throw std::invalid_argument("compute_normal_estimates: k exceeds cloud size");
    std::vector<NormalEstimate> out(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[static_cast<std::size_t>(i)] = estimate_one(cloud, static_cast<std::size_t>(i), k);
    return out;
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k) {
    const std::vector<NormalEstimate> ests = compute_normal_estimates(cloud, k);
    PointCloud out = cloud;
    out.normals.resize(cloud.size());
    out.normal_valid.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out.normals[i] = ests[i].valid ? ests[i].normal : Vec3::Zero();
        out.normal_valid[i] = ests[i].valid ? 1 : 0;
    }
    return out;
}

namespace serial {

std::vector<NormalEstimate> compute_normal_estimates(const PointCloud& cloud, std::size_t k) {
    const std::size_t n = cloud.size();
    if (k > n) throw std::invalid_argument("compute_normal_estimates: k exceeds cloud size");
    std::vector<NormalEstimate> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = estimate_one(cloud, i, k);
    return out;
}

}  // namespace serial

}  // namespace otflow
