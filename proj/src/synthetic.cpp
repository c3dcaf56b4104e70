#include "sfc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace sfc {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinHit = 1e-3;

std::optional<double> hit(const PlanePrimitive& plane, const Vec3& dir) {
  const double denom = plane.normal.x * dir.x + plane.normal.y * dir.y + plane.normal.z * dir.z;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = plane.offset / denom;
  if (t <= kMinHit) return std::nullopt;
  return t;
}

std::optional<double> hit(const CylinderPrimitive& cyl, const Vec3& dir) {
  const double a = dir.x * dir.x + dir.y * dir.y;
  if (a < 1e-12) return std::nullopt;
  const double b = -2.0 * (dir.x * cyl.cx + dir.y * cyl.cy);
  const double c = cyl.cx * cyl.cx + cyl.cy * cyl.cy - cyl.radius * cyl.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  for (double t : {(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)}) {
    if (t <= kMinHit) continue;
    const double z = t * dir.z;
    if (z >= cyl.z_min && z <= cyl.z_max) return t;
  }
  return std::nullopt;
}

std::optional<double> hit(const BoxPrimitive& box, const Vec3& dir) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  const double lo[3] = {box.min.x, box.min.y, box.min.z};
  const double hi[3] = {box.max.x, box.max.y, box.max.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-12) {
      if (lo[axis] > 0.0 || hi[axis] < 0.0) return std::nullopt;
      continue;
    }
    double t0 = lo[axis] / d[axis];
    double t1 = hi[axis] / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_near <= kMinHit) return std::nullopt;
  return t_near;
}

void check_spec(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw BadSpec("scene has no primitives");
  const BeamModel& b = spec.beams;
  if (b.rows < 1 || b.cols < 1) throw BadSpec("beam model needs at least one row and column");
  if (!(b.fov_up_deg + b.fov_down_deg > 0.0)) throw BadSpec("beam field of view must be positive");
  if (b.jitter < 0.0 || b.jitter > 1.0) throw BadSpec("beam jitter must lie in [0, 1]");
  if (b.range_noise < 0.0 || !(b.max_range > 0.0)) throw BadSpec("bad range noise or maximum range");
  for (const Primitive& p : spec.primitives) {
    if (const auto* c = std::get_if<CylinderPrimitive>(&p.shape); c && !(c->radius > 0.0)) {
      throw BadSpec("cylinder radius must be positive");
    }
    if (const auto* pl = std::get_if<PlanePrimitive>(&p.shape); pl && pl->normal.norm() == 0.0) {
      throw BadSpec("plane normal must be non-zero");
    }
  }
}

}  // namespace

PointCloud gen_synthetic_scene(const SceneSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  const BeamModel& b = spec.beams;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> slot(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> shade(-0.05, 0.05);

  const double fov = (b.fov_up_deg + b.fov_down_deg) * kDeg;
  std::vector<Vec3> xyz;
  std::vector<double> intensity;
  std::vector<std::uint32_t> labels;
  std::vector<std::pair<double, std::size_t>> hits;
  for (int row = 0; row < b.rows; ++row) {
    for (int col = 0; col < b.cols; ++col) {
      const double elevation = b.fov_up_deg * kDeg - (row + 0.5 + b.jitter * slot(rng)) / b.rows * fov;
      const double azimuth = std::numbers::pi - (col + 0.5 + b.jitter * slot(rng)) / b.cols * 2.0 * std::numbers::pi;
      const Vec3 dir{std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                     std::sin(elevation)};
      hits.clear();
      for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        const auto t = std::visit([&](const auto& shape) { return hit(shape, dir); }, spec.primitives[i].shape);
        if (t && *t <= b.max_range) hits.emplace_back(*t, i);
      }
      std::sort(hits.begin(), hits.end());
      if (!b.all_returns && hits.size() > 1) hits.resize(1);
      for (const auto& [t, i] : hits) {
        const double range = std::max(kMinHit, t + b.range_noise * noise(rng));
        xyz.push_back({range * dir.x, range * dir.y, range * dir.z});
        const Primitive& p = spec.primitives[i];
        intensity.push_back(std::clamp(p.reflectivity + shade(rng), 0.0, 1.0));
        labels.push_back(p.label);
      }
    }
  }
  // Scans store float32; round now so files and in-memory clouds agree.
  for (Vec3& p : xyz) {
    p = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)};
  }
  for (double& i : intensity) i = static_cast<float>(i);
  return PointCloud::from_points(std::move(xyz), std::move(intensity), std::move(labels));
}

SceneSpec parse_scene_spec(const std::string& text) {
  SceneSpec spec;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream f(line);
    std::string kind;
    if (!(f >> kind)) continue;
    const auto fail = [&]() { return BadSpec("scene spec line " + std::to_string(line_no) + ": " + line); };
    Primitive prim;
    if (kind == "beams") {
      if (!(f >> spec.beams.rows >> spec.beams.cols >> spec.beams.fov_up_deg >> spec.beams.fov_down_deg)) throw fail();
      continue;
    } else if (kind == "jitter") {
      if (!(f >> spec.beams.jitter)) throw fail();
      continue;
    } else if (kind == "noise") {
      if (!(f >> spec.beams.range_noise)) throw fail();
      continue;
    } else if (kind == "max_range") {
      if (!(f >> spec.beams.max_range)) throw fail();
      continue;
    } else if (kind == "returns") {
      std::string mode;
      if (!(f >> mode) || (mode != "all" && mode != "first")) throw fail();
      spec.beams.all_returns = mode == "all";
      continue;
    } else if (kind == "plane") {
      PlanePrimitive p;
      if (!(f >> p.normal.x >> p.normal.y >> p.normal.z >> p.offset >> prim.label)) throw fail();
      prim.shape = p;
    } else if (kind == "cylinder") {
      CylinderPrimitive c;
      if (!(f >> c.cx >> c.cy >> c.radius >> c.z_min >> c.z_max >> prim.label)) throw fail();
      prim.shape = c;
    } else if (kind == "box") {
      BoxPrimitive bx;
      if (!(f >> bx.min.x >> bx.min.y >> bx.min.z >> bx.max.x >> bx.max.y >> bx.max.z >> prim.label)) throw fail();
      prim.shape = bx;
    } else {
      throw fail();
    }
    double reflectivity = 0.0;
    if (f >> reflectivity) prim.reflectivity = reflectivity;
    spec.primitives.push_back(prim);
  }
  check_spec(spec);
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open scene spec: " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_scene_spec(buf.str());
}

SceneSpec street_scene(std::uint64_t seed, const BeamModel& beams) {
  enum : std::uint32_t { kRoad = 1, kBuilding = 2, kPole = 3, kCar = 4, kPerson = 5, kTrunk = 6 };
  std::mt19937_64 rng(seed);
  const auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double ground = -1.73;
  SceneSpec spec;
  spec.beams = beams;
  spec.primitives.push_back({PlanePrimitive{{0, 0, 1}, ground}, kRoad, 0.2});

  for (double side : {-1.0, 1.0}) {
    double x = -60.0;
    while (x < 60.0) {
      const double length = uniform(8.0, 20.0);
      const double setback = uniform(9.0, 16.0);
      const double height = uniform(5.0, 18.0);
      BoxPrimitive b{{x, side > 0 ? setback : -setback - 6.0, ground}, {x + length, side > 0 ? setback + 6.0 : -setback, ground + height}};
      spec.primitives.push_back({b, kBuilding, uniform(0.25, 0.45)});
      x += length + uniform(1.0, 6.0);
    }
  }
  const int poles = 6 + static_cast<int>(rng() % 8);
  for (int i = 0; i < poles; ++i) {
    const double side = (i % 2 == 0) ? 1.0 : -1.0;
    CylinderPrimitive c{uniform(-40.0, 40.0), side * uniform(5.0, 7.5), uniform(0.08, 0.2), ground, ground + uniform(3.0, 7.0)};
    spec.primitives.push_back({c, kPole, uniform(0.4, 0.7)});
  }
  const int trunks = 4 + static_cast<int>(rng() % 6);
  for (int i = 0; i < trunks; ++i) {
    const double side = (i % 2 == 0) ? -1.0 : 1.0;
    CylinderPrimitive c{uniform(-45.0, 45.0), side * uniform(6.0, 8.5), uniform(0.15, 0.35), ground, ground + uniform(2.0, 4.0)};
    spec.primitives.push_back({c, kTrunk, uniform(0.2, 0.35)});
  }
  const int cars = 5 + static_cast<int>(rng() % 8);
  for (int i = 0; i < cars; ++i) {
    const double x = uniform(-40.0, 40.0);
    if (std::abs(x) < 4.0) continue;
    const double lane = (i % 2 == 0) ? uniform(2.0, 4.0) : -uniform(2.0, 4.0);
    BoxPrimitive b{{x, lane - 0.9, ground}, {x + uniform(3.8, 4.8), lane + 0.9, ground + uniform(1.4, 1.8)}};
    spec.primitives.push_back({b, kCar, uniform(0.1, 0.9)});
  }
  const int people = 3 + static_cast<int>(rng() % 6);
  for (int i = 0; i < people; ++i) {
    const double side = (i % 2 == 0) ? 1.0 : -1.0;
    CylinderPrimitive c{uniform(-25.0, 25.0), side * uniform(4.5, 6.0), uniform(0.2, 0.3), ground, ground + uniform(1.5, 1.9)};
    spec.primitives.push_back({c, kPerson, uniform(0.3, 0.5)});
  }
  return spec;
}

}  // namespace sfc
