#pragma once

#include "otflow/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace otflow {

enum class BodyShape { plane, box, sphere };
enum class ColorMode { per_body, gradient };
// rigid: ground truth is the noise-free rigid displacement (frame-2 jitter is
// measurement noise). observed: ground truth absorbs the jitter exactly.
enum class GroundTruthMode { rigid, observed };

struct BodyMotion {
    Vec3 axis = Vec3::UnitZ();
    double angle = 0.0;               // radians, |angle| <= 0.3
    Vec3 translation = Vec3::Zero();  // meters, norm <= 3.0
};

struct SceneSpec {
    std::size_t body_count = 1;
    std::size_t points_per_body = 128;
    std::vector<BodyShape> shapes;    // cycled over bodies; empty = plane,box,sphere cycle
    std::vector<BodyMotion> motions;  // one per body; empty = random within the bounds below
    double max_rotation = 0.3;        // radians
    double max_translation = 3.0;     // meters; kept under the 3.5 m label filter
    ColorMode color_mode = ColorMode::gradient;
    double jitter_sigma = 0.0;        // frame-2 position noise, meters
    double outlier_fraction = 0.0;    // extra clutter points appended to frame 2
    double min_gap = 2.0;             // minimum surface separation between bodies, meters
    double min_point_spacing = 0.0;   // within-body sample separation (dart throwing); 0 = off
    double body_scale = 1.0;          // half-extent of each body, meters
    GroundTruthMode gt_mode = GroundTruthMode::rigid;
    std::uint64_t seed = 0;
};

struct SynthScene {
    PointCloud p;                      // frame 1
    PointCloud q;                      // frame 2: moved bodies (same order) + appended clutter
    FlowField gt_flow;                 // per frame-1 point
    std::vector<std::size_t> body_id;  // per frame-1 point
};

/// Deterministic two-frame rigid scene with analytic normals and exact
/// ground truth. Rotation pivots on each body's point centroid. Colors are
/// quantized to 8 bits so a PLY round trip is lossless. Throws
/// std::invalid_argument on a degenerate or out-of-bounds spec.
SynthScene generate(const SceneSpec& spec);

/// Perturbs a seeded random subset of the valid labels with per-component
/// uniform noise in [-magnitude, magnitude]. Stress input for refinement
/// tests.
PseudoLabelSet corrupt_labels(const PseudoLabelSet& labels, double fraction, double magnitude,
                              std::uint64_t seed);

/// Plain-text key=value scene config ('#' comments allowed). Keys: bodies,
/// points_per_body, shapes, color, jitter, outliers, min_gap, spacing, scale,
/// gt, seed, max_rotation, max_translation. Unknown keys are errors.
SceneSpec parse_scene_spec(std::istream& in);
SceneSpec parse_scene_spec_file(const std::string& path);

}  // namespace otflow
