#include "otflow/cost.hpp"

#include <cmath>
#include <stdexcept>

namespace otflow {

namespace {

void check_inputs(const PointCloud& a, const PointCloud& b, const CostParams& params) {
    if (params.theta_d <= 0.0) throw std::invalid_argument("build_cost_matrix: theta_d must be positive");
    if (params.use_color) {
        if (params.theta_c <= 0.0)
            throw std::invalid_argument("build_cost_matrix: theta_c must be positive");
        if (!a.has_colors() || !b.has_colors())
            throw std::invalid_argument("build_cost_matrix: color measure enabled but a cloud has no colors");
    }
    if (params.use_normal &&
        (!a.has_normals() || !b.has_normals() || a.normal_valid.size() != a.size() ||
         b.normal_valid.size() != b.size()))
        throw std::invalid_argument("build_cost_matrix: normal measure enabled but a cloud has no normals");
}

double pair_cost(const PointCloud& a, const PointCloud& b, std::size_t i, std::size_t j,
                 const CostParams& params) {
    double c = coordinate_cost(a.positions[i], b.positions[j], params.theta_d);
    if (params.use_color) c += color_cost(a.colors[i], b.colors[j], params.theta_c);
    if (params.use_normal)
        c += normal_cost(a.normals[i], a.normal_valid[i] != 0, b.normals[j], b.normal_valid[j] != 0);
    return c;
}

}  // namespace

double coordinate_cost(const Vec3& p, const Vec3& q, double theta_d) {
    return 1.0 - std::exp(-(p - q).squaredNorm() / (2.0 * theta_d * theta_d));
}

double color_cost(const Vec3& c1, const Vec3& c2, double theta_c) {
    return 1.0 - std::exp(-(c1 - c2).squaredNorm() / (2.0 * theta_c * theta_c));
}

double normal_cost(const Vec3& n1, bool valid1, const Vec3& n2, bool valid2) {
    if (!valid1 || !valid2) return 1.0;
    const double denom = n1.norm() * n2.norm();
    if (denom == 0.0) return 1.0;
    return 1.0 - std::abs(n1.dot(n2)) / denom;
}

CostMatrix build_cost_matrix(const PointCloud& a, const PointCloud& b, const CostParams& params) {
    check_inputs(a, b, params);
    CostMatrix c(a.size(), b.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.size()); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            c(i, static_cast<Eigen::Index>(j)) = pair_cost(a, b, static_cast<std::size_t>(i), j, params);
    return c;
}

namespace serial {

CostMatrix build_cost_matrix(const PointCloud& a, const PointCloud& b, const CostParams& params) {
    check_inputs(a, b, params);
    CostMatrix c(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pair_cost(a, b, i, j, params);
    return c;
}

}  // namespace serial

}  // namespace otflow
