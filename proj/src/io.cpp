#include "gjs/io.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gjs/error.hpp"

namespace gjs {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void put_u32_be(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::ofstream& out, const char* type, const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> buf;
  put_u32_be(buf, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = buf.size();
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), data.begin(), data.end());
  const auto crc = crc32(0L, buf.data() + type_at, static_cast<uInt>(buf.size() - type_at));
  put_u32_be(buf, static_cast<std::uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InputError("CSV has no column '" + name + "'");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (c >= row.size()) throw InputError("short CSV row");
    try {
      out.push_back(std::stod(row[c]));
    } catch (const std::exception&) {
      throw InputError("non-numeric CSV cell '" + row[c] + "' in column " + name);
    }
  }
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV file " + path);
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_line(line));
  }
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
}

void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw InputError("CSV header and column count differ");
  CsvTable t;
  t.header = header;
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != n) throw InputError("CSV columns differ in length");
  t.rows.resize(n);
  for (std::size_t r = 0; r < n; ++r)
    for (const auto& c : columns) t.rows[r].push_back(format_double(c[r]));
  write_csv(path, t);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& value) { write_text(path, value.dump(2) + "\n"); }

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw InputError("cannot create directory " + path + ": " + ec.message());
}

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

Vec vec_from_json(const json& j) {
  if (!j.is_array()) throw InputError("expected a JSON array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError("expected a JSON array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Mat mat_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InputError("expected a non-empty JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Vec first = vec_from_json(j[0]);
  Mat m(rows, first.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vec r = vec_from_json(j[static_cast<std::size_t>(i)]);
    if (r.size() != first.size()) throw DimensionError("ragged matrix rows");
    m.row(i) = r.transpose();
  }
  return m;
}

json to_json(const DiagonalGaussian& g) { return {{"mu", to_json(g.mu())}, {"log_var", to_json(g.log_var())}}; }

json to_json(const FullGaussian& g) { return {{"mu", to_json(g.mu())}, {"sigma", to_json(g.sigma())}}; }

DiagonalGaussian diagonal_from_json(const json& j) {
  if (!j.is_object() || !j.contains("mu") || !j.contains("log_var"))
    throw InputError("diagonal Gaussian needs \"mu\" and \"log_var\"");
  return DiagonalGaussian(vec_from_json(j.at("mu")), vec_from_json(j.at("log_var")));
}

FullGaussian full_from_json(const json& j) {
  if (!j.is_object() || !j.contains("mu")) throw InputError("Gaussian needs \"mu\"");
  if (j.contains("sigma")) return FullGaussian(vec_from_json(j.at("mu")), mat_from_json(j.at("sigma")));
  if (j.contains("log_var")) return FullGaussian::from_diagonal(diagonal_from_json(j));
  throw InputError("Gaussian needs \"sigma\" or \"log_var\"");
}

json to_json(const DivergenceSpec& spec) {
  return {{"family", to_string(spec.family)},
          {"alpha", spec.alpha},
          {"lambda_skew", spec.lambda_skew},
          {"convention", to_string(spec.convention)},
          {"weight", spec.weight},
          {"mmd_bandwidth", spec.mmd_bandwidth}};
}

DivergenceSpec divergence_spec_from_json(const json& j) {
  try {
    DivergenceSpec spec(parse_family(j.at("family").get<std::string>()),
                        parse_convention(j.at("convention").get<std::string>()));
    spec.alpha = j.value("alpha", spec.alpha);
    spec.lambda_skew = j.value("lambda_skew", spec.lambda_skew);
    spec.weight = j.value("weight", spec.weight);
    spec.mmd_bandwidth = j.value("mmd_bandwidth", spec.mmd_bandwidth);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw InputError(std::string("divergence spec: ") + e.what());
  }
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

void write_png_gray(const std::string& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
  if (width <= 0 || height <= 0 || pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw InputError("PNG pixel buffer does not match width x height");
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (static_cast<std::size_t>(width) + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    const auto* row = pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
    raw.insert(raw.end(), row, row + width);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw NumericalError("zlib compression failed");
  packed.resize(packed_size);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(kSignature), 8);
  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit grayscale
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
}

}  // namespace gjs
