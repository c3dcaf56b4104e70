#include "sfc/io.hpp"

#include <fstream>
#include <iterator>

#include "sfc/binary.hpp"

namespace sfc {

namespace {

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (is.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

void dump(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

PointCloud read_scan(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() % 16 != 0) {
    throw MalformedScan(path.string() + ": length " + std::to_string(bytes.size()) + " is not a multiple of 16");
  }
  const std::size_t n = bytes.size() / 16;
  std::vector<Vec3> xyz(n);
  std::vector<double> intensity(n);
  for (std::size_t k = 0; k < n; ++k) {
    const char* rec = bytes.data() + 16 * k;
    xyz[k] = {binary::get_f32(rec), binary::get_f32(rec + 4), binary::get_f32(rec + 8)};
    intensity[k] = binary::get_f32(rec + 12);
  }
  return PointCloud::from_points(std::move(xyz), std::move(intensity));
}

void write_scan(const std::filesystem::path& path, const PointCloud& cloud) {
  if (cloud.intensity.size() != cloud.size()) throw CountMismatch("intensity count differs from point count");
  std::vector<char> bytes;
  bytes.reserve(cloud.size() * 16);
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    binary::put_f32(bytes, static_cast<float>(cloud.xyz[k].x));
    binary::put_f32(bytes, static_cast<float>(cloud.xyz[k].y));
    binary::put_f32(bytes, static_cast<float>(cloud.xyz[k].z));
    binary::put_f32(bytes, static_cast<float>(cloud.intensity[k]));
  }
  dump(path, bytes);
}

std::vector<std::uint32_t> read_raw_labels(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() % 4 != 0) {
    throw MalformedLabels(path.string() + ": length " + std::to_string(bytes.size()) + " is not a multiple of 4");
  }
  std::vector<std::uint32_t> raw(bytes.size() / 4);
  for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = binary::get_u32(bytes.data() + 4 * k);
  return raw;
}

std::vector<std::uint32_t> read_labels(const std::filesystem::path& path, std::size_t expected_points) {
  auto raw = read_raw_labels(path);
  if (raw.size() != expected_points) {
    throw CountMismatch(path.string() + ": " + std::to_string(raw.size()) + " labels for " +
                        std::to_string(expected_points) + " points");
  }
  for (auto& value : raw) value &= 0xFFFFu;
  return raw;
}

void write_raw_labels(const std::filesystem::path& path, std::span<const std::uint32_t> raw) {
  std::vector<char> bytes;
  bytes.reserve(raw.size() * 4);
  for (std::uint32_t v : raw) binary::put_u32(bytes, v);
  dump(path, bytes);
}

void write_predictions(const std::filesystem::path& path, std::span<const std::uint32_t> predictions) {
  for (std::uint32_t p : predictions) {
    if (p > 0xFFFFu) throw BadLabel("prediction " + std::to_string(p) + " does not fit in 16 bits");
  }
  write_raw_labels(path, predictions);
}

}  // namespace sfc
