#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gjs/divergence.hpp"
#include "gjs/gaussian.hpp"

namespace gjs {

using json = nlohmann::json;

// Text written with %.17g so every double survives a round trip.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws InputError when absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);
// Columns of equal length written side by side.
void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

json read_json(const std::string& path);
void write_json(const std::string& path, const json& value);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
void ensure_directory(const std::string& path);

// {"mu": [...], "log_var": [...]} and {"mu": [...], "sigma": [[...], ...]}
json to_json(const DiagonalGaussian& g);
json to_json(const FullGaussian& g);
DiagonalGaussian diagonal_from_json(const json& j);
// Accepts either layout; a log_var object becomes a diagonal covariance.
FullGaussian full_from_json(const json& j);

json to_json(const DivergenceSpec& spec);
DivergenceSpec divergence_spec_from_json(const json& j);

json to_json(const Vec& v);
json to_json(const Mat& m);
Vec vec_from_json(const json& j);
Mat mat_from_json(const json& j);

// FNV-1a over the compact dump of a JSON value, as 16 hex digits.
std::string config_hash(const json& config);

// 8-bit grayscale PNG, row-major pixels.
void write_png_gray(const std::string& path, int width, int height, const std::vector<std::uint8_t>& pixels);

}  // namespace gjs
