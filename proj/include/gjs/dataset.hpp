#pragma once

#include <cstdint>
#include <string>

#include "gjs/gaussian.hpp"

namespace gjs {

// Rows are examples with values in [0, 1].
struct Dataset {
  Mat x;

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
};

// Little-endian container: "GJSD", u32 count, u32 dim, count * dim float32.
Dataset read_gjsd(const std::string& path);
void write_gjsd(const std::string& path, const Dataset& data);

// IDX image file (magic 0x00000803, big-endian dims) scaled to [0, 1].
Dataset read_idx_images(const std::string& path, std::int64_t limit = -1);
// IDX -> GJSD; returns the number of images written.
std::int64_t convert_idx(const std::string& idx_path, const std::string& gjsd_path, std::int64_t limit = -1);

// Noisy points on a circle, squashed into [0, 1]^2.
Dataset ring_dataset(std::int64_t n, std::uint64_t seed, double noise = 0.05);

// Reads either format, chosen by the file's magic number.
Dataset load_dataset(const std::string& path);

// First `n` rows (all if n < 0 or n > size).
Dataset head(const Dataset& data, std::int64_t n);

// Locates a named dataset file: an existing path is used as is, otherwise
// it is looked up under $GJS_DATA_DIR and then the build-time data directory.
std::string resolve_data_path(const std::string& name);

}  // namespace gjs
