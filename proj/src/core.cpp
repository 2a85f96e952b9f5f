#include "otflow/core.hpp"

#include <cmath>
#include <stdexcept>

namespace otflow {

std::size_t PseudoLabelSet::valid_count() const {
    std::size_t count = 0;
    for (std::uint8_t v : valid) count += (v != 0);
    return count;
}

namespace {

bool finite3(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace

ValidationReport validate_cloud(const PointCloud& cloud) {
    ValidationReport report;
    const std::size_t n = cloud.size();
    if (n == 0) {
        report.violations.push_back("empty cloud");
        return report;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!finite3(cloud.positions[i])) {
            report.violations.push_back("non-finite coordinate at point " + std::to_string(i));
        }
    }
    if (cloud.has_colors()) {
        if (cloud.colors.size() != n) {
            report.violations.push_back("length mismatch: colors");
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3& c = cloud.colors[i];
                if (!finite3(c) || c.minCoeff() < 0.0 || c.maxCoeff() > 1.0) {
                    report.violations.push_back("color out of range at point " + std::to_string(i));
                }
            }
        }
    }
    if (cloud.has_normals()) {
        if (cloud.normals.size() != n) {
            report.violations.push_back("length mismatch: normals");
        } else if (cloud.normal_valid.size() != n) {
            report.violations.push_back("length mismatch: normal validity mask");
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (!cloud.normal_valid[i]) continue;
                const double norm = cloud.normals[i].norm();
                if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
                    report.violations.push_back("non-unit normal at point " + std::to_string(i));
                }
            }
        }
    }
    return report;
}

PointCloud prewarp(const PointCloud& cloud, const FlowField& flow) {
    if (flow.size() != cloud.size()) {
        throw std::invalid_argument("prewarp: flow length " + std::to_string(flow.size()) +
                                    " does not match cloud size " + std::to_string(cloud.size()));
    }
    PointCloud warped = cloud;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        warped.positions[i] = cloud.positions[i] + flow.vectors[i];
    }
    return warped;
}

}  // namespace otflow
