#pragma once

#include "defgoal/cloud.hpp"

#include <string>

namespace defgoal {

/// Write `x y z` float32 vertices. ASCII by default; set `binary` for the
/// little-endian variant. Coordinates are quantized to float32 either way.
void write_ply(const std::string& path, const PointCloud& cloud, bool binary = false);

/// Read a PLY written by write_ply (ascii or binary_little_endian).
/// Throws InvalidArgument with the path on any malformed input.
PointCloud read_ply(const std::string& path);

}  // namespace defgoal
