#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sfc/geometry.hpp"

namespace sfc {

// n . p = offset
struct PlanePrimitive {
  Vec3 normal{0, 0, 1};
  double offset = -1.73;
};

// Vertical cylinder standing on the z axis direction.
struct CylinderPrimitive {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.1;
  double z_min = -2.0;
  double z_max = 2.0;
};

// Axis-aligned box.
struct BoxPrimitive {
  Vec3 min;
  Vec3 max;
};

struct Primitive {
  std::variant<PlanePrimitive, CylinderPrimitive, BoxPrimitive> shape;
  std::uint32_t label = 1;
  double reflectivity = 0.3;
};

// Rotating multi-beam sensor at the origin. Beams are jittered inside their
// angular slot; every primitive hit along a beam yields a return when
// `all_returns`, so occluded surfaces share the beam's frustum.
struct BeamModel {
  int rows = 64;
  int cols = 2048;
  double fov_up_deg = 3.0;
  double fov_down_deg = 25.0;
  double jitter = 0.5;
  double range_noise = 0.01;
  double max_range = 120.0;
  bool all_returns = true;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  BeamModel beams;
};

// Ray-cast scan with per-point labels; deterministic for a fixed seed.
// Throws BadSpec for an empty or degenerate specification.
PointCloud gen_synthetic_scene(const SceneSpec& spec, std::uint64_t seed);

// Text format, one directive per line:
//   beams <rows> <cols> <fov_up_deg> <fov_down_deg>
//   jitter <fraction> | noise <meters> | max_range <meters> | returns all|first
//   plane <nx> <ny> <nz> <offset> <label> [reflectivity]
//   cylinder <cx> <cy> <radius> <z_min> <z_max> <label> [reflectivity]
//   box <x0> <y0> <z0> <x1> <y1> <z1> <label> [reflectivity]
SceneSpec parse_scene_spec(const std::string& text);
SceneSpec read_scene_spec(const std::filesystem::path& path);

// Street with ground, facades, poles, cars and pedestrians placed from the seed.
SceneSpec street_scene(std::uint64_t seed, const BeamModel& beams = {});

}  // namespace sfc
