#include "vrod/scene_json.h"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vrod/obj_io.h"

namespace vrod {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw SceneParseError(path.empty() ? what : path + ": " + what);
}

std::string item(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

/// Rejects unknown keys so typos surface instead of silently defaulting.
void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) fail(path, "unknown field '" + key + "'");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

const json& field(const json& obj, const char* key, const std::string& path) {
  const json* value = find(obj, key);
  if (value == nullptr) fail(path, std::string("missing field '") + key + "'");
  return *value;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array");
  return v;
}

Vec3 as_vec3(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  if (arr.size() != 3) fail(path, "expected 3 numbers");
  return Vec3(as_number(arr[0], index(path, 0)), as_number(arr[1], index(path, 1)),
              as_number(arr[2], index(path, 2)));
}

Quat as_quat(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  if (arr.size() != 4) fail(path, "expected 4 numbers (x, y, z, w)");
  Quat q(as_number(arr[3], index(path, 3)), as_number(arr[0], index(path, 0)),
         as_number(arr[1], index(path, 1)), as_number(arr[2], index(path, 2)));
  if (q.norm() < 1e-9) fail(path, "rotation has near-zero norm");
  q.normalize();
  return q;
}

double opt_number(const json& obj, const char* key, double fallback, const std::string& path) {
  const json* v = find(obj, key);
  return v == nullptr ? fallback : as_number(*v, item(path, key));
}

int opt_int(const json& obj, const char* key, int fallback, const std::string& path) {
  const json* v = find(obj, key);
  return v == nullptr ? fallback : as_int(*v, item(path, key));
}

bool opt_bool(const json& obj, const char* key, bool fallback, const std::string& path) {
  const json* v = find(obj, key);
  return v == nullptr ? fallback : as_bool(*v, item(path, key));
}

std::vector<double> as_number_list(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_number(arr[i], index(path, i)));
  return out;
}

std::vector<Vec3> as_vec3_list(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  std::vector<Vec3> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_vec3(arr[i], index(path, i)));
  return out;
}

SolverSettings parse_settings(const json& obj, const std::string& path) {
  check_keys(obj,
             {"dt", "iterations", "substeps", "beta", "gravity", "dichotomous_iterations",
              "shape_match_period", "contact_stiffness", "velocity_damping", "deterministic",
              "scale_mode"},
             path);
  SolverSettings s;
  s.dt = opt_number(obj, "dt", s.dt, path);
  s.iterations = opt_int(obj, "iterations", s.iterations, path);
  s.substeps = opt_int(obj, "substeps", s.substeps, path);
  s.beta = opt_number(obj, "beta", s.beta, path);
  if (const json* v = find(obj, "gravity")) s.gravity = as_vec3(*v, item(path, "gravity"));
  s.dichotomous_iterations =
      opt_int(obj, "dichotomous_iterations", s.dichotomous_iterations, path);
  s.shape_match_period = opt_int(obj, "shape_match_period", s.shape_match_period, path);
  // Omitted contact stiffness means rigid contacts (infinite stiffness).
  s.contact_stiffness = opt_number(obj, "contact_stiffness", s.contact_stiffness, path);
  s.velocity_damping = opt_number(obj, "velocity_damping", s.velocity_damping, path);
  s.deterministic = opt_bool(obj, "deterministic", s.deterministic, path);
  if (const json* v = find(obj, "scale_mode")) {
    const std::string mode = as_string(*v, item(path, "scale_mode"));
    if (mode == "simulated") {
      s.scale_mode = ScaleMode::kSimulated;
    } else if (mode == "post_step_length_ratio") {
      s.scale_mode = ScaleMode::kPostStepLengthRatio;
    } else {
      fail(item(path, "scale_mode"),
           "expected \"simulated\" or \"post_step_length_ratio\", got \"" + mode + "\"");
    }
  }
  return s;
}

MaterialParams parse_material(const json& obj, const std::string& path) {
  check_keys(obj,
             {"stretch_x", "stretch_y", "stretch_z", "bend_x", "bend_y", "bend_z", "volume",
              "density"},
             path);
  MaterialParams m;
  m.stretch_x = opt_number(obj, "stretch_x", m.stretch_x, path);
  m.stretch_y = opt_number(obj, "stretch_y", m.stretch_y, path);
  m.stretch_z = opt_number(obj, "stretch_z", m.stretch_z, path);
  m.bend_x = opt_number(obj, "bend_x", m.bend_x, path);
  m.bend_y = opt_number(obj, "bend_y", m.bend_y, path);
  m.bend_z = opt_number(obj, "bend_z", m.bend_z, path);
  m.volume = opt_number(obj, "volume", m.volume, path);
  m.density = opt_number(obj, "density", m.density, path);
  return m;
}

Rod parse_rod(const json& obj, const std::string& path) {
  check_keys(obj,
             {"centers", "radius", "radii", "scales", "material", "pinned", "collision_group",
              "self_collide", "center_velocity", "scale_velocity", "angular_velocity", "bones",
              "bone_weights"},
             path);
  const std::vector<Vec3> centers = as_vec3_list(field(obj, "centers", path), item(path, "centers"));
  if (centers.size() < 2) fail(item(path, "centers"), "a rod needs at least 2 vertices");

  std::vector<double> radii;
  const json* radius = find(obj, "radius");
  const json* radii_field = find(obj, "radii");
  if ((radius != nullptr) == (radii_field != nullptr)) {
    fail(path, "expected exactly one of 'radius' or 'radii'");
  }
  if (radius != nullptr) {
    radii.push_back(as_number(*radius, item(path, "radius")));
  } else {
    radii = as_number_list(*radii_field, item(path, "radii"));
  }

  std::vector<double> scales;
  if (const json* v = find(obj, "scales")) scales = as_number_list(*v, item(path, "scales"));

  Rod rod;
  try {
    rod.rest = make_rest_pose(centers, radii, scales);
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  rod.state = make_rest_state(rod.rest);
  rod.material = opt_int(obj, "material", 0, path);
  rod.collision_group = opt_int(obj, "collision_group", -1, path);
  rod.self_collide = opt_bool(obj, "self_collide", false, path);

  const int n = rod.rest.vertex_count();
  rod.pinned.assign(n, 0);
  if (const json* v = find(obj, "pinned")) {
    const std::string where = item(path, "pinned");
    const json& arr = as_array(*v, where);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const int vertex = as_int(arr[i], index(where, i));
      if (vertex < 0 || vertex >= n) fail(index(where, i), "pinned vertex out of range");
      rod.pinned[vertex] = 1;
    }
  }

  if (const json* v = find(obj, "center_velocity")) {
    const auto vel = as_vec3_list(*v, item(path, "center_velocity"));
    if (static_cast<int>(vel.size()) != n) {
      fail(item(path, "center_velocity"), "expected one entry per vertex");
    }
    rod.state.center_vel = vel;
  }
  if (const json* v = find(obj, "scale_velocity")) {
    const auto vel = as_number_list(*v, item(path, "scale_velocity"));
    if (static_cast<int>(vel.size()) != n) {
      fail(item(path, "scale_velocity"), "expected one entry per vertex");
    }
    rod.state.scale_vel = vel;
  }
  if (const json* v = find(obj, "angular_velocity")) {
    const auto vel = as_vec3_list(*v, item(path, "angular_velocity"));
    if (static_cast<int>(vel.size()) != rod.rest.element_count()) {
      fail(item(path, "angular_velocity"), "expected one entry per element");
    }
    rod.state.angular_vel = vel;
  }

  if (const json* v = find(obj, "bones")) {
    const std::string where = item(path, "bones");
    const json& arr = as_array(*v, where);
    for (std::size_t i = 0; i < arr.size(); ++i) rod.bones.push_back(as_int(arr[i], index(where, i)));
    const std::string weights_where = item(path, "bone_weights");
    const json& weights = as_array(field(obj, "bone_weights", path), weights_where);
    if (static_cast<int>(weights.size()) != n) fail(weights_where, "expected one row per vertex");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      rod.bone_weights.push_back(as_number_list(weights[i], index(weights_where, i)));
    }
  } else if (find(obj, "bone_weights") != nullptr) {
    fail(path, "'bone_weights' given without 'bones'");
  }
  return rod;
}

TriMesh parse_mesh(const json& obj, const std::string& path, const std::string& base_dir) {
  if (const json* v = find(obj, "obj")) {
    std::string mesh_path = as_string(*v, item(path, "obj"));
    if (!base_dir.empty() && !mesh_path.empty() && mesh_path.front() != '/') {
      mesh_path = base_dir + "/" + mesh_path;
    }
    try {
      return read_obj(mesh_path);
    } catch (const std::exception& e) {
      fail(item(path, "obj"), e.what());
    }
  }
  TriMesh mesh;
  mesh.vertices = as_vec3_list(field(obj, "vertices", path), item(path, "vertices"));
  const std::string tri_where = item(path, "triangles");
  const json& tris = as_array(field(obj, "triangles", path), tri_where);
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const std::string where = index(tri_where, i);
    const json& tri = as_array(tris[i], where);
    if (tri.size() != 3) fail(where, "expected 3 vertex indices");
    mesh.triangles.push_back({as_int(tri[0], index(where, 0)), as_int(tri[1], index(where, 1)),
                              as_int(tri[2], index(where, 2))});
  }
  return mesh;
}

Scene parse_scene(const json& root, const std::string& base_dir) {
  if (!root.is_object()) fail("", "top level must be an object");
  check_keys(root,
             {"schema", "settings", "materials", "rods", "planes", "kinematic_pills", "bones",
              "bundles", "pin_motions", "soft_pins", "activations", "probes", "skin"},
             "");
  const int schema = as_int(field(root, "schema", ""), "schema");
  if (schema != 1) fail("schema", "unsupported schema version " + std::to_string(schema));

  Scene scene;
  if (const json* v = find(root, "settings")) scene.settings = parse_settings(*v, "settings");

  if (const json* v = find(root, "materials")) {
    const json& arr = as_array(*v, "materials");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      scene.materials.push_back(parse_material(arr[i], index("materials", i)));
    }
  }
  if (scene.materials.empty()) scene.materials.push_back(MaterialParams{});

  const json& rods = as_array(field(root, "rods", ""), "rods");
  for (std::size_t i = 0; i < rods.size(); ++i) {
    scene.rods.push_back(parse_rod(rods[i], index("rods", i)));
  }

  if (const json* v = find(root, "planes")) {
    const json& arr = as_array(*v, "planes");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("planes", i);
      check_keys(arr[i], {"normal", "offset"}, where);
      HalfPlane plane;
      plane.normal = as_vec3(field(arr[i], "normal", where), item(where, "normal"));
      const double norm = plane.normal.norm();
      if (norm < 1e-9) fail(item(where, "normal"), "normal has near-zero norm");
      plane.normal /= norm;
      plane.offset = opt_number(arr[i], "offset", 0.0, where);
      scene.planes.push_back(plane);
    }
  }

  if (const json* v = find(root, "bones")) {
    const json& arr = as_array(*v, "bones");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("bones", i);
      check_keys(arr[i], {"keys"}, where);
      Bone bone;
      const std::string keys_where = item(where, "keys");
      const json& keys = as_array(field(arr[i], "keys", where), keys_where);
      for (std::size_t k = 0; k < keys.size(); ++k) {
        const std::string kw = index(keys_where, k);
        check_keys(keys[k], {"t", "position", "rotation"}, kw);
        RigidKeyframe key;
        key.t = as_number(field(keys[k], "t", kw), item(kw, "t"));
        if (const json* p = find(keys[k], "position")) key.position = as_vec3(*p, item(kw, "position"));
        if (const json* r = find(keys[k], "rotation")) key.rotation = as_quat(*r, item(kw, "rotation"));
        bone.keys.push_back(key);
      }
      scene.bones.push_back(std::move(bone));
    }
  }

  if (const json* v = find(root, "kinematic_pills")) {
    const json& arr = as_array(*v, "kinematic_pills");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("kinematic_pills", i);
      check_keys(arr[i], {"c0", "c1", "r0", "r1", "group", "bone"}, where);
      KinematicPill kp;
      kp.pill.c0 = as_vec3(field(arr[i], "c0", where), item(where, "c0"));
      kp.pill.c1 = as_vec3(field(arr[i], "c1", where), item(where, "c1"));
      kp.pill.r0 = as_number(field(arr[i], "r0", where), item(where, "r0"));
      kp.pill.r1 = as_number(field(arr[i], "r1", where), item(where, "r1"));
      kp.pill.group = opt_int(arr[i], "group", -1, where);
      kp.bone = opt_int(arr[i], "bone", -1, where);
      scene.kinematic_pills.push_back(kp);
    }
  }

  if (const json* v = find(root, "bundles")) {
    const json& arr = as_array(*v, "bundles");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("bundles", i);
      const json& group = as_array(arr[i], where);
      std::vector<BundleMember> members;
      for (std::size_t k = 0; k < group.size(); ++k) {
        const std::string mw = index(where, k);
        check_keys(group[k], {"rod", "vertex"}, mw);
        BundleMember m;
        m.rod = as_int(field(group[k], "rod", mw), item(mw, "rod"));
        m.vertex = as_int(field(group[k], "vertex", mw), item(mw, "vertex"));
        members.push_back(m);
      }
      scene.bundles.push_back(std::move(members));
    }
  }

  if (const json* v = find(root, "pin_motions")) {
    const json& arr = as_array(*v, "pin_motions");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("pin_motions", i);
      check_keys(arr[i], {"rod", "vertex", "start", "target", "t0", "t1"}, where);
      PinMotion pm;
      pm.rod = as_int(field(arr[i], "rod", where), item(where, "rod"));
      pm.vertex = as_int(field(arr[i], "vertex", where), item(where, "vertex"));
      pm.start = as_vec3(field(arr[i], "start", where), item(where, "start"));
      pm.target = as_vec3(field(arr[i], "target", where), item(where, "target"));
      pm.t0 = opt_number(arr[i], "t0", 0.0, where);
      pm.t1 = as_number(field(arr[i], "t1", where), item(where, "t1"));
      scene.pin_motions.push_back(pm);
    }
  }

  if (const json* v = find(root, "soft_pins")) {
    const json& arr = as_array(*v, "soft_pins");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("soft_pins", i);
      check_keys(arr[i], {"rod", "vertex", "target", "stiffness"}, where);
      SoftPin sp;
      sp.rod = as_int(field(arr[i], "rod", where), item(where, "rod"));
      sp.vertex = as_int(field(arr[i], "vertex", where), item(where, "vertex"));
      sp.target = as_vec3(field(arr[i], "target", where), item(where, "target"));
      sp.stiffness = opt_number(arr[i], "stiffness", sp.stiffness, where);
      scene.soft_pins.push_back(sp);
    }
  }

  if (const json* v = find(root, "activations")) {
    const json& arr = as_array(*v, "activations");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("activations", i);
      check_keys(arr[i], {"rod", "factor", "t_start", "t_end", "first_element", "last_element"},
                 where);
      Activation act;
      act.rod = as_int(field(arr[i], "rod", where), item(where, "rod"));
      act.factor = opt_number(arr[i], "factor", act.factor, where);
      act.t_start = opt_number(arr[i], "t_start", act.t_start, where);
      act.t_end = opt_number(arr[i], "t_end", act.t_end, where);
      act.first_element = opt_int(arr[i], "first_element", act.first_element, where);
      act.last_element = opt_int(arr[i], "last_element", act.last_element, where);
      scene.activations.push_back(act);
    }
  }

  if (const json* v = find(root, "probes")) {
    const json& arr = as_array(*v, "probes");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = index("probes", i);
      check_keys(arr[i], {"name", "rod", "vertex"}, where);
      Probe probe;
      probe.name = as_string(field(arr[i], "name", where), item(where, "name"));
      probe.rod = as_int(field(arr[i], "rod", where), item(where, "rod"));
      probe.vertex = as_int(field(arr[i], "vertex", where), item(where, "vertex"));
      scene.probes.push_back(std::move(probe));
    }
  }

  if (const json* v = find(root, "skin")) {
    const std::string where = "skin";
    check_keys(*v, {"obj", "vertices", "triangles", "max_influences", "epsilon",
                    "smooth_iterations"},
               where);
    SkinSetup skin;
    skin.mesh = parse_mesh(*v, where, base_dir);
    skin.max_influences = opt_int(*v, "max_influences", skin.max_influences, where);
    skin.epsilon = opt_number(*v, "epsilon", skin.epsilon, where);
    skin.smooth_iterations = opt_int(*v, "smooth_iterations", skin.smooth_iterations, where);
    scene.skin = std::move(skin);
  }

  scene.validate();
  return scene;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json quat_json(const Quat& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }

json scene_json(const Scene& scene) {
  json root;
  root["schema"] = 1;

  const SolverSettings& s = scene.settings;
  json settings;
  settings["dt"] = s.dt;
  settings["iterations"] = s.iterations;
  settings["substeps"] = s.substeps;
  settings["beta"] = s.beta;
  settings["gravity"] = vec3_json(s.gravity);
  settings["dichotomous_iterations"] = s.dichotomous_iterations;
  settings["shape_match_period"] = s.shape_match_period;
  if (std::isfinite(s.contact_stiffness)) settings["contact_stiffness"] = s.contact_stiffness;
  settings["velocity_damping"] = s.velocity_damping;
  settings["deterministic"] = s.deterministic;
  settings["scale_mode"] =
      s.scale_mode == ScaleMode::kSimulated ? "simulated" : "post_step_length_ratio";
  root["settings"] = std::move(settings);

  json materials = json::array();
  for (const MaterialParams& m : scene.materials) {
    json mat;
    mat["stretch_x"] = m.stretch_x;
    mat["stretch_y"] = m.stretch_y;
    mat["stretch_z"] = m.stretch_z;
    mat["bend_x"] = m.bend_x;
    mat["bend_y"] = m.bend_y;
    mat["bend_z"] = m.bend_z;
    mat["volume"] = m.volume;
    mat["density"] = m.density;
    materials.push_back(std::move(mat));
  }
  root["materials"] = std::move(materials);

  json rods = json::array();
  for (const Rod& rod : scene.rods) {
    json r;
    json centers = json::array();
    for (const Vec3& c : rod.state.centers) centers.push_back(vec3_json(c));
    r["centers"] = std::move(centers);
    r["radii"] = rod.rest.radii;
    r["scales"] = rod.state.scales;
    r["material"] = rod.material;
    json pinned = json::array();
    for (int v = 0; v < rod.rest.vertex_count(); ++v) {
      if (rod.pinned[v]) pinned.push_back(v);
    }
    r["pinned"] = std::move(pinned);
    r["collision_group"] = rod.collision_group;
    r["self_collide"] = rod.self_collide;

    bool any_center_vel = false;
    for (const Vec3& v : rod.state.center_vel) any_center_vel |= v.squaredNorm() > 0.0;
    if (any_center_vel) {
      json vel = json::array();
      for (const Vec3& v : rod.state.center_vel) vel.push_back(vec3_json(v));
      r["center_velocity"] = std::move(vel);
    }
    bool any_scale_vel = false;
    for (double v : rod.state.scale_vel) any_scale_vel |= v != 0.0;
    if (any_scale_vel) r["scale_velocity"] = rod.state.scale_vel;
    bool any_angular = false;
    for (const Vec3& v : rod.state.angular_vel) any_angular |= v.squaredNorm() > 0.0;
    if (any_angular) {
      json vel = json::array();
      for (const Vec3& v : rod.state.angular_vel) vel.push_back(vec3_json(v));
      r["angular_velocity"] = std::move(vel);
    }

    if (!rod.bones.empty()) {
      r["bones"] = rod.bones;
      json weights = json::array();
      for (const auto& row : rod.bone_weights) weights.push_back(row);
      r["bone_weights"] = std::move(weights);
    }
    rods.push_back(std::move(r));
  }
  root["rods"] = std::move(rods);

  if (!scene.planes.empty()) {
    json planes = json::array();
    for (const HalfPlane& plane : scene.planes) {
      planes.push_back({{"normal", vec3_json(plane.normal)}, {"offset", plane.offset}});
    }
    root["planes"] = std::move(planes);
  }

  if (!scene.bones.empty()) {
    json bones = json::array();
    for (const Bone& bone : scene.bones) {
      json keys = json::array();
      for (const RigidKeyframe& key : bone.keys) {
        keys.push_back({{"t", key.t},
                        {"position", vec3_json(key.position)},
                        {"rotation", quat_json(key.rotation)}});
      }
      bones.push_back({{"keys", std::move(keys)}});
    }
    root["bones"] = std::move(bones);
  }

  if (!scene.kinematic_pills.empty()) {
    json pills = json::array();
    for (const KinematicPill& kp : scene.kinematic_pills) {
      json p;
      p["c0"] = vec3_json(kp.pill.c0);
      p["c1"] = vec3_json(kp.pill.c1);
      p["r0"] = kp.pill.r0;
      p["r1"] = kp.pill.r1;
      if (kp.pill.group >= 0) p["group"] = kp.pill.group;
      if (kp.bone >= 0) p["bone"] = kp.bone;
      pills.push_back(std::move(p));
    }
    root["kinematic_pills"] = std::move(pills);
  }

  if (!scene.bundles.empty()) {
    json bundles = json::array();
    for (const auto& group : scene.bundles) {
      json members = json::array();
      for (const BundleMember& m : group) {
        members.push_back({{"rod", m.rod}, {"vertex", m.vertex}});
      }
      bundles.push_back(std::move(members));
    }
    root["bundles"] = std::move(bundles);
  }

  if (!scene.pin_motions.empty()) {
    json motions = json::array();
    for (const PinMotion& pm : scene.pin_motions) {
      motions.push_back({{"rod", pm.rod},
                         {"vertex", pm.vertex},
                         {"start", vec3_json(pm.start)},
                         {"target", vec3_json(pm.target)},
                         {"t0", pm.t0},
                         {"t1", pm.t1}});
    }
    root["pin_motions"] = std::move(motions);
  }

  if (!scene.soft_pins.empty()) {
    json pins = json::array();
    for (const SoftPin& sp : scene.soft_pins) {
      json p;
      p["rod"] = sp.rod;
      p["vertex"] = sp.vertex;
      p["target"] = vec3_json(sp.target);
      if (std::isfinite(sp.stiffness)) p["stiffness"] = sp.stiffness;
      pins.push_back(std::move(p));
    }
    root["soft_pins"] = std::move(pins);
  }

  if (!scene.activations.empty()) {
    json acts = json::array();
    for (const Activation& act : scene.activations) {
      acts.push_back({{"rod", act.rod},
                      {"factor", act.factor},
                      {"t_start", act.t_start},
                      {"t_end", act.t_end},
                      {"first_element", act.first_element},
                      {"last_element", act.last_element}});
    }
    root["activations"] = std::move(acts);
  }

  if (!scene.probes.empty()) {
    json probes = json::array();
    for (const Probe& probe : scene.probes) {
      probes.push_back({{"name", probe.name}, {"rod", probe.rod}, {"vertex", probe.vertex}});
    }
    root["probes"] = std::move(probes);
  }

  if (scene.skin.has_value()) {
    const SkinSetup& skin = *scene.skin;
    json s_json;
    json vertices = json::array();
    for (const Vec3& v : skin.mesh.vertices) vertices.push_back(vec3_json(v));
    s_json["vertices"] = std::move(vertices);
    json triangles = json::array();
    for (const auto& tri : skin.mesh.triangles) {
      triangles.push_back(json::array({tri[0], tri[1], tri[2]}));
    }
    s_json["triangles"] = std::move(triangles);
    s_json["max_influences"] = skin.max_influences;
    s_json["epsilon"] = skin.epsilon;
    s_json["smooth_iterations"] = skin.smooth_iterations;
    root["skin"] = std::move(s_json);
  }

  return root;
}

std::string directory_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

}  // namespace

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneParseError(path + ": cannot open scene file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scene_text(buffer.str(), path, directory_of(path));
}

Scene parse_scene_text(const std::string& text, const std::string& source_name,
                       const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneParseError(source_name + ": " + e.what());
  }
  try {
    return parse_scene(root, base_dir);
  } catch (const SceneParseError& e) {
    throw SceneParseError(source_name + ": " + e.what());
  } catch (const std::logic_error& e) {
    // Scene::validate failures get the same source prefix as structural errors.
    throw SceneParseError(source_name + ": " + e.what());
  }
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << scene_json(scene).dump(2) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::string scene_to_text(const Scene& scene) { return scene_json(scene).dump(2) + "\n"; }

std::vector<std::vector<Vec3>> read_slice_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneParseError(path + ": cannot open slice file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_slice_text(buffer.str(), path);
}

std::vector<std::vector<Vec3>> parse_slice_text(const std::string& text,
                                                const std::string& source_name) {
  std::vector<std::vector<Vec3>> slices;
  std::vector<Vec3> current;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double x = 0.0, y = 0.0, z = 0.0;
    if (fields >> x) {
      std::string trailing;
      if (!(fields >> y >> z) || (fields >> trailing)) {
        throw SceneParseError(source_name + ":" + std::to_string(line_number) +
                              ": expected three numbers per point");
      }
      current.emplace_back(x, y, z);
    } else if (!current.empty()) {
      slices.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) slices.push_back(std::move(current));
  return slices;
}

void write_rod_scene(std::span<const std::vector<Vec3>> polylines, double radius,
                     const std::string& path) {
  json root;
  root["schema"] = 1;
  json rods = json::array();
  for (const std::vector<Vec3>& line : polylines) {
    json centers = json::array();
    for (const Vec3& c : line) centers.push_back(vec3_json(c));
    rods.push_back({{"centers", std::move(centers)}, {"radius", radius}});
  }
  root["rods"] = std::move(rods);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << root.dump(2) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace vrod
