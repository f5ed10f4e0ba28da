#include "gjs/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "gjs/error.hpp"
#include "gjs/rng.hpp"

#ifndef GJS_DEFAULT_DATA_DIR
#define GJS_DEFAULT_DATA_DIR "data"
#endif

namespace gjs {

namespace {

static_assert(std::endian::native == std::endian::little, "GJSD I/O assumes a little-endian host");

std::uint32_t read_u32_le(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw InputError("truncated file header");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

std::uint32_t read_u32_be(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw InputError("truncated IDX header");
  return std::uint32_t{b[3]} | std::uint32_t{b[2]} << 8 | std::uint32_t{b[1]} << 16 | std::uint32_t{b[0]} << 24;
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

}  // namespace

Dataset read_gjsd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset " + path);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "GJSD", 4) != 0)
    throw InputError(path + " is not a GJSD container");
  const std::uint32_t count = read_u32_le(in);
  const std::uint32_t dim = read_u32_le(in);
  if (count == 0 || dim == 0) throw InputError(path + " declares an empty dataset");
  std::vector<float> buf(static_cast<std::size_t>(count) * dim);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float))))
    throw InputError(path + " is truncated");
  Dataset d;
  d.x.resize(count, dim);
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::uint32_t j = 0; j < dim; ++j) {
      const float v = buf[static_cast<std::size_t>(i) * dim + j];
      if (!(v >= 0.0f && v <= 1.0f)) throw InputError(path + " holds a value outside [0, 1]");
      d.x(i, j) = v;
    }
  return d;
}

void write_gjsd(const std::string& path, const Dataset& data) {
  if (data.size() == 0 || data.dim() == 0) throw InputError("refusing to write an empty dataset");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out.write("GJSD", 4);
  write_u32_le(out, static_cast<std::uint32_t>(data.size()));
  write_u32_le(out, static_cast<std::uint32_t>(data.dim()));
  std::vector<float> row(static_cast<std::size_t>(data.dim()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) row[static_cast<std::size_t>(j)] = static_cast<float>(data.x(i, j));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

Dataset read_idx_images(const std::string& path, std::int64_t limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open IDX file " + path);
  if (read_u32_be(in) != 0x00000803u) throw InputError(path + " is not an IDX3 ubyte image file");
  std::int64_t count = read_u32_be(in);
  const std::uint32_t rows = read_u32_be(in);
  const std::uint32_t cols = read_u32_be(in);
  if (limit >= 0 && limit < count) count = limit;
  const auto dim = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(static_cast<std::size_t>(count) * dim);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw InputError(path + " is truncated");
  Dataset d;
  d.x.resize(count, static_cast<Eigen::Index>(dim));
  for (std::int64_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      d.x(i, static_cast<Eigen::Index>(j)) = buf[static_cast<std::size_t>(i) * dim + j] / 255.0;
  return d;
}

std::int64_t convert_idx(const std::string& idx_path, const std::string& gjsd_path, std::int64_t limit) {
  const Dataset d = read_idx_images(idx_path, limit);
  write_gjsd(gjsd_path, d);
  return d.size();
}

Dataset ring_dataset(std::int64_t n, std::uint64_t seed, double noise) {
  if (n < 1) throw InputError("ring dataset needs n >= 1");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, noise);
  Dataset d;
  d.x.resize(n, 2);
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = angle(rng);
    const double r = 0.35 + jitter(rng);
    d.x(i, 0) = std::clamp(0.5 + r * std::cos(t), 0.0, 1.0);
    d.x(i, 1) = std::clamp(0.5 + r * std::sin(t), 0.0, 1.0);
  }
  return d;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset " + path);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4)) throw InputError(path + " is too short to be a dataset");
  if (std::memcmp(magic.data(), "GJSD", 4) == 0) return read_gjsd(path);
  return read_idx_images(path);
}

Dataset head(const Dataset& data, std::int64_t n) {
  if (n < 0 || n >= data.size()) return data;
  return Dataset{data.x.topRows(n)};
}

std::string resolve_data_path(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::exists(name)) return name;
  if (const char* env = std::getenv("GJS_DATA_DIR")) {
    const fs::path p = fs::path(env) / name;
    if (fs::exists(p)) return p.string();
  }
  const fs::path p = fs::path(GJS_DEFAULT_DATA_DIR) / name;
  if (fs::exists(p)) return p.string();
  throw InputError("dataset '" + name + "' not found (set GJS_DATA_DIR)");
}

}  // namespace gjs
