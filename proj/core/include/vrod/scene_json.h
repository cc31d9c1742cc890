#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrod/scene.h"

namespace vrod {

/// Malformed or schema-violating scene input. The message carries the source
/// name and the JSON field path (e.g. "scene.json: rods[0].centers: ...").
class SceneParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads, schema-checks and validates a scene file (schema version 1; see
/// docs/scene_format.md). Throws SceneParseError naming the source and the
/// offending field for structural and semantic problems alike.
Scene load_scene(const std::string& path);

/// Same from an in-memory document. `base_dir` resolves relative mesh paths.
Scene parse_scene_text(const std::string& text, const std::string& source_name,
                       const std::string& base_dir = "");

/// Writes a scene as schema-1 JSON (meshes inlined, lossless round trip of
/// everything the schema covers).
void save_scene(const Scene& scene, const std::string& path);
std::string scene_to_text(const Scene& scene);

/// Reads the slice text format: one "x y z" point per line, blank lines
/// separate consecutive slices, '#' starts a comment. Errors name the line.
std::vector<std::vector<Vec3>> read_slice_file(const std::string& path);
std::vector<std::vector<Vec3>> parse_slice_text(const std::string& text,
                                                const std::string& source_name);

/// Writes polylines as a scene file holding one uniform-radius rod per
/// polyline (the comb output format).
void write_rod_scene(std::span<const std::vector<Vec3>> polylines, double radius,
                     const std::string& path);

}  // namespace vrod
