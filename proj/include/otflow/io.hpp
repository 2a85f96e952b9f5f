#pragma once

#include "otflow/core.hpp"

#include <string>

namespace otflow {

enum class PlyFormat { ascii, binary_little_endian };

/// PLY reader for ascii and binary_little_endian files. Properties x,y,z are
/// required; nx,ny,nz and red,green,blue (uchar or float) are picked up when
/// present, other properties are skipped. A stored normal is valid iff its
/// length is within 1e-6 of 1. Throws std::runtime_error on malformed
/// headers, element count mismatch, or big-endian files.
PointCloud read_cloud(const std::string& path);

/// Writes positions as doubles, normals as doubles (invalid ones as 0,0,0),
/// colors as 8-bit uchar. Ascii output uses shortest-round-trip formatting,
/// so a write/read cycle is bit-exact in both formats.
void write_cloud(const std::string& path, const PointCloud& cloud,
                 PlyFormat format = PlyFormat::binary_little_endian);

struct FlowFile {
    FlowField flow;
    std::vector<std::uint8_t> valid;  // empty unless has_validity
    bool has_validity = false;
};

/// Flow container: magic "SFL1", u32 LE count, u8 has-validity flag,
/// count x 3 float32 LE vectors, then count validity bytes when flagged.
void write_flow(const std::string& path, const FlowField& flow);
void write_flow(const std::string& path, const PseudoLabelSet& labels);
FlowFile read_flow(const std::string& path);

}  // namespace otflow
