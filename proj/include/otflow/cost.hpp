#pragma once

#include "otflow/core.hpp"

namespace otflow {

/// Which per-pair measures enter the transport cost. The coordinate term is
/// always on; matching degrades to noise without it.
struct CostParams {
    double theta_d = 1.75;  // meters; coordinate Gaussian width
    double theta_c = 0.2;   // color Gaussian width (unit RGB)
    bool use_color = true;
    bool use_normal = true;
};

using CostMatrix = Matrix;  // n_a x n_b, entries in [0, #measures]

/// 1 - exp(-|p-q|^2 / (2 theta_d^2)), in [0,1).
double coordinate_cost(const Vec3& p, const Vec3& q, double theta_d);

/// 1 - exp(-|c1-c2|^2 / (2 theta_c^2)), in [0,1).
double color_cost(const Vec3& c1, const Vec3& c2, double theta_c);

/// 1 - |n1.n2| / (|n1||n2|) when both normals are usable; an invalid normal
/// costs a uniform 1 against every partner (a row-constant offset cannot
/// change that row's argmax).
double normal_cost(const Vec3& n1, bool valid1, const Vec3& n2, bool valid2);

/// Dense pairwise cost: sum of the enabled measures. Throws
/// std::invalid_argument when an enabled measure's attribute is missing on
/// either cloud, or when a theta is not positive.
CostMatrix build_cost_matrix(const PointCloud& a, const PointCloud& b, const CostParams& params);

namespace serial {
CostMatrix build_cost_matrix(const PointCloud& a, const PointCloud& b, const CostParams& params);
}

}  // namespace otflow
