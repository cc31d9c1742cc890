#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "vrod/collision.h"
#include "vrod/skinning.h"

namespace vrod {

/// Reads vertices and faces from a Wavefront OBJ file. Faces with more than
/// three corners are fan-triangulated; normals and texture data are ignored.
/// Throws std::runtime_error with the offending line on malformed input.
TriMesh read_obj(const std::filesystem::path& path);

/// Writes the mesh with recomputed area-weighted vertex normals.
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

/// Inspection mesh of one tapered capsule: two spherical caps joined by the
/// tangent cone, revolved around the axis.
TriMesh tessellate_pill(const Pill& pill, int longitudes = 16, int cap_rings = 9);

/// One mesh containing every pill's tessellation.
TriMesh tessellate_pills(std::span<const Pill> pills, int longitudes = 16, int cap_rings = 9);

}  // namespace vrod
