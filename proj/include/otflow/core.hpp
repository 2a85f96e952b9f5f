#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace otflow {

using Vec3 = Eigen::Vector3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One frame of a scan. Positions are meters; colors, when present, have
/// every channel in [0,1]; normals, when present, are unit length or carry
/// a cleared validity flag (degenerate neighborhoods, see normals.hpp).
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;                // empty or size()
    std::vector<Vec3> normals;               // empty or size()
    std::vector<std::uint8_t> normal_valid;  // empty or size(), 1 = usable

    std::size_t size() const { return positions.size(); }
    bool has_colors() const { return !colors.empty(); }
    bool has_normals() const { return !normals.empty(); }
};

/// Per-point displacement field (meters) over an owning cloud.
struct FlowField {
    std::vector<Vec3> vectors;

    FlowField() = default;
    explicit FlowField(std::vector<Vec3> v) : vectors(std::move(v)) {}

    std::size_t size() const { return vectors.size(); }
};

/// Flow labels plus a validity mask. Invalid entries hold the zero
/// sentinel and must only be consumed through the mask.
struct PseudoLabelSet {
    std::vector<Vec3> labels;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return labels.size(); }
    std::size_t valid_count() const;
};

/// Per-source-point match into a target cloud.
struct CorrespondenceSet {
    std::vector<Eigen::Index> target_index;
    std::vector<std::uint8_t> is_valid;

    std::size_t size() const { return target_index.size(); }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks the PointCloud invariants and reports every violation found
/// (non-finite coordinate, color out of range, length mismatch, ...).
ValidationReport validate_cloud(const PointCloud& cloud);

/// Shifts every position by its flow vector; colors and normals are
/// copied through untouched. Throws std::invalid_argument on length
/// mismatch.
PointCloud prewarp(const PointCloud& cloud, const FlowField& flow);

}  // namespace otflow
