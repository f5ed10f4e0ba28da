#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gjs/dataset.hpp"
#include "gjs/error.hpp"
#include "gjs/io.hpp"

namespace gjs {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gjs_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(FormatDouble, RoundTripsExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST_F(TempDir, CsvRoundTrip) {
  write_numeric_csv(path("a.csv"), {"x", "y"}, {{1.0, 0.1}, {-2.0, 1.0 / 3.0}});
  const auto t = read_csv(path("a.csv"));
  ASSERT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(t.numeric_column("y"), (std::vector<double>{-2.0, 1.0 / 3.0}));
  EXPECT_THROW(t.column("z"), InputError);
  EXPECT_THROW(write_numeric_csv(path("b.csv"), {"x"}, {{1.0}, {2.0}}), InputError);
  EXPECT_THROW(read_csv(path("missing.csv")), InputError);
}

TEST_F(TempDir, JsonGaussiansRoundTrip) {
  const FullGaussian f(Vec{{1.0, 2.0}}, Mat{{2.0, 0.1}, {0.1, 0.5}});
  write_json(path("f.json"), to_json(f));
  const auto r = full_from_json(read_json(path("f.json")));
  EXPECT_EQ(r.mu(), f.mu());
  EXPECT_EQ(r.sigma(), f.sigma());
  const DiagonalGaussian d(Vec{{0.5}}, Vec{{-0.25}});
  const auto rd = diagonal_from_json(json::parse(to_json(d).dump()));
  EXPECT_EQ(rd.log_var(), d.log_var());
  const auto from_lv = full_from_json(json::parse(R"({"mu": [0, 1], "log_var": [0, 0.6931471805599453]})"));
  EXPECT_NEAR(from_lv.sigma()(1, 1), 2.0, 1e-15);
  EXPECT_THROW(full_from_json(json::parse(R"({"mu": [0]})")), InputError);
  write_text(path("bad.json"), "{not json");
  EXPECT_THROW(read_json(path("bad.json")), InputError);
}

TEST(Json, DivergenceSpecRoundTrip) {
  DivergenceSpec s(Family::GJSDual, SkewConvention::Original);
  s.alpha = 0.3;
  s.weight = 2.5;
  s.mmd_bandwidth = 0.7;
  const auto r = divergence_spec_from_json(json::parse(to_json(s).dump()));
  EXPECT_EQ(r.family, s.family);
  EXPECT_EQ(r.convention, s.convention);
  EXPECT_EQ(r.alpha, s.alpha);
  EXPECT_EQ(r.weight, s.weight);
  EXPECT_EQ(r.mmd_bandwidth, s.mmd_bandwidth);
  EXPECT_THROW(divergence_spec_from_json(json::parse(R"({"family": "gjs"})")), InputError);
  EXPECT_THROW(divergence_spec_from_json(json::parse(R"({"family": "gjs", "convention": "primed", "alpha": 3})")),
               InputError);
}

TEST(Json, ConfigHashIsStable) {
  const json a = {{"x", 1}, {"y", {1, 2}}};
  const json b = json::parse(R"({"y": [1, 2], "x": 1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(a), config_hash(json{{"x", 2}, {"y", {1, 2}}}));
}

TEST_F(TempDir, PngHeaderAndChunks) {
  std::vector<std::uint8_t> px(6 * 4);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 10);
  write_png_gray(path("a.png"), 6, 4, px);
  const auto bytes = read_bytes(path("a.png"));
  const std::vector<std::uint8_t> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  ASSERT_GT(bytes.size(), 33u);
  EXPECT_TRUE(std::equal(sig.begin(), sig.end(), bytes.begin()));
  EXPECT_EQ(std::string(bytes.begin() + 12, bytes.begin() + 16), "IHDR");
  EXPECT_EQ(bytes[19], 6);  // width, big endian
  EXPECT_EQ(bytes[23], 4);  // height
  EXPECT_EQ(bytes[24], 8);  // bit depth
  EXPECT_EQ(bytes[25], 0);  // grayscale
  EXPECT_EQ(std::string(bytes.end() - 8, bytes.end() - 4), "IEND");
  EXPECT_THROW(write_png_gray(path("b.png"), 5, 5, px), InputError);
}

TEST_F(TempDir, GjsdRoundTrip) {
  Dataset d;
  d.x = Mat{{0.0, 0.25, 1.0}, {0.5, 0.75, 0.125}};
  write_gjsd(path("d.gjsd"), d);
  const auto r = read_gjsd(path("d.gjsd"));
  EXPECT_EQ(r.x, d.x);
  EXPECT_EQ(load_dataset(path("d.gjsd")).x, d.x);
  const auto bytes = read_bytes(path("d.gjsd"));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GJSD");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes.size(), 12u + 6u * 4u);
}

TEST_F(TempDir, GjsdRejectsBadFiles) {
  write_bytes(path("short"), {'G', 'J'});
  EXPECT_THROW(read_gjsd(path("short")), InputError);
  write_bytes(path("trunc"), {'G', 'J', 'S', 'D', 2, 0, 0, 0, 1, 0, 0, 0, 0, 0});
  EXPECT_THROW(read_gjsd(path("trunc")), InputError);
  std::vector<std::uint8_t> out_of_range{'G', 'J', 'S', 'D', 1, 0, 0, 0, 1, 0, 0, 0};
  const float two = 2.0f;
  const auto* b = reinterpret_cast<const std::uint8_t*>(&two);
  out_of_range.insert(out_of_range.end(), b, b + 4);
  write_bytes(path("range"), out_of_range);
  EXPECT_THROW(read_gjsd(path("range")), InputError);
  Dataset bad;
  bad.x = Mat::Zero(0, 3);
  EXPECT_THROW(write_gjsd(path("empty"), bad), InputError);
}

TEST_F(TempDir, IdxConversion) {
  std::vector<std::uint8_t> idx{0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 2};
  for (int i = 0; i < 12; ++i) idx.push_back(static_cast<std::uint8_t>(i * 20));
  write_bytes(path("img.idx"), idx);
  const auto d = read_idx_images(path("img.idx"));
  ASSERT_EQ(d.size(), 3);
  ASSERT_EQ(d.dim(), 4);
  EXPECT_DOUBLE_EQ(d.x(1, 2), 120.0 / 255.0);
  EXPECT_EQ(read_idx_images(path("img.idx"), 2).size(), 2);
  EXPECT_EQ(convert_idx(path("img.idx"), path("img.gjsd")), 3);
  const auto g = read_gjsd(path("img.gjsd"));
  EXPECT_NEAR((g.x - d.x).cwiseAbs().maxCoeff(), 0.0, 1e-7);
  EXPECT_EQ(load_dataset(path("img.idx")).x, d.x);
  write_bytes(path("labels.idx"), {0, 0, 8, 1, 0, 0, 0, 1, 7});
  EXPECT_THROW(read_idx_images(path("labels.idx")), InputError);
}

TEST(Dataset, RingIsInUnitSquareAndDeterministic) {
  const auto a = ring_dataset(500, 3);
  EXPECT_EQ(a.dim(), 2);
  EXPECT_GE(a.x.minCoeff(), 0.0);
  EXPECT_LE(a.x.maxCoeff(), 1.0);
  EXPECT_EQ(a.x, ring_dataset(500, 3).x);
  const Vec r = (a.x.rowwise() - Eigen::RowVector2d(0.5, 0.5)).rowwise().norm();
  EXPECT_NEAR(r.mean(), 0.35, 0.01);
  EXPECT_EQ(head(a, 10).size(), 10);
}

TEST(Dataset, BundledMnistSubset) {
  const auto train = load_dataset(resolve_data_path("mnist-train-images-idx3-ubyte"));
  const auto test = load_dataset(resolve_data_path("mnist-test-images-idx3-ubyte"));
  EXPECT_EQ(train.size(), 4096);
  EXPECT_EQ(test.size(), 1024);
  EXPECT_EQ(train.dim(), 784);
  EXPECT_GE(train.x.minCoeff(), 0.0);
  EXPECT_LE(train.x.maxCoeff(), 1.0);
  EXPECT_THROW(resolve_data_path("no-such-dataset"), InputError);
}

}  // namespace
}  // namespace gjs
