#include "gjs/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "gjs/error.hpp"

namespace gjs::kernels {

namespace {

template <class Body>
void for_each_chunk(Eigen::Index rows, Exec exec, Body&& body, Eigen::Index chunk_rows = kChunkRows) {
  const Eigen::Index chunks = (rows + chunk_rows - 1) / chunk_rows;
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < chunks; ++c) {
      const Eigen::Index begin = c * chunk_rows;
      body(c, begin, std::min(rows, begin + chunk_rows));
    }
  } else {
    for (Eigen::Index c = 0; c < chunks; ++c) {
      const Eigen::Index begin = c * chunk_rows;
      body(c, begin, std::min(rows, begin + chunk_rows));
    }
  }
}

void check_out(std::span<double> out, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(out.size()) != rows)
    throw DimensionError("output span has " + std::to_string(out.size()) + " slots for " + std::to_string(rows) +
                         " rows");
}

double log_sum_exp(const Eigen::ArrayXd& e) {
  const double m = e.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((e - m).exp().sum());
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanStats mean_and_std_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw InputError("mean of an empty sample");
  MeanStats s;
  s.mean = pairwise_sum(values) / static_cast<double>(n);
  if (n < 2) return s;
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (values[i] - s.mean) * (values[i] - s.mean);
  const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
  s.std_error = std::sqrt(var / static_cast<double>(n));
  return s;
}

void log_pdf_rows(const FullGaussian& g, const Mat& points, std::span<double> out, Exec exec) {
  if (points.cols() != g.dim()) throw DimensionError("points have wrong column count for density");
  check_out(out, points.rows());
  const double norm = -0.5 * (static_cast<double>(g.dim()) * std::log(2.0 * std::numbers::pi) + g.log_det());
  const auto& L = g.chol_lower();
  for_each_chunk(points.rows(), exec, [&](Eigen::Index, Eigen::Index begin, Eigen::Index end) {
    Mat centered = points.middleRows(begin, end - begin).transpose();
    centered.colwise() -= g.mu();
    L.triangularView<Eigen::Lower>().solveInPlace(centered);
    for (Eigen::Index i = begin; i < end; ++i)
      out[static_cast<std::size_t>(i)] = norm - 0.5 * centered.col(i - begin).squaredNorm();
  });
}

void log_pdf_rows_reference(const FullGaussian& g, const Mat& points, std::span<double> out) {
  check_out(out, points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out[static_cast<std::size_t>(i)] = log_pdf(g, Vec(points.row(i).transpose()));
}

void kde_log_density(const Mat& centers, const Vec& bandwidth, const Mat& points, std::span<double> out,
                     Exec exec) {
  const Eigen::Index d = centers.cols();
  if (points.cols() != d || bandwidth.size() != d) throw DimensionError("KDE dimension mismatch");
  check_out(out, points.rows());
  const Eigen::Index n_centers = centers.rows();
  // Scaled centers, one contiguous array per coordinate.
  Mat scaled = centers * bandwidth.cwiseInverse().asDiagonal();
  const double norm = -std::log(static_cast<double>(n_centers)) -
                      0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
                      bandwidth.array().log().sum();
  for_each_chunk(points.rows(), exec, [&](Eigen::Index, Eigen::Index begin, Eigen::Index end) {
    Eigen::ArrayXd e(n_centers);
    for (Eigen::Index i = begin; i < end; ++i) {
      e.setZero();
      for (Eigen::Index k = 0; k < d; ++k) {
        const double xk = points(i, k) / bandwidth(k);
        e -= 0.5 * (scaled.col(k).array() - xk).square();
      }
      out[static_cast<std::size_t>(i)] = norm + log_sum_exp(e);
    }
  });
}

void kde_log_density_reference(const Mat& centers, const Vec& bandwidth, const Mat& points,
                               std::span<double> out) {
  check_out(out, points.rows());
  const Eigen::Index d = centers.cols();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> e(static_cast<std::size_t>(centers.rows()));
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double z = (points(i, k) - centers(j, k)) / bandwidth(k);
        acc -= 0.5 * z * z;
      }
      e[static_cast<std::size_t>(j)] = acc;
      m = std::max(m, acc);
    }
    double s = 0.0;
    for (double v : e) s += std::exp(v - m);
    double logn = std::log(static_cast<double>(centers.rows()));
    double lognorm = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) lognorm += std::log(bandwidth(k)) + 0.5 * std::log(2.0 * std::numbers::pi);
    out[static_cast<std::size_t>(i)] = m + std::log(s) - logn - lognorm;
  }
}

double gaussian_kernel_sum(const Mat& a, const Mat& b, double bandwidth, bool skip_diagonal, Exec exec) {
  if (a.cols() != b.cols()) throw DimensionError("kernel sum operands differ in dimension");
  if (skip_diagonal && a.rows() != b.rows()) throw DimensionError("diagonal exclusion needs equal row counts");
  const double scale = -0.5 / (bandwidth * bandwidth);
  const Eigen::VectorXd b_sq = b.rowwise().squaredNorm();
  std::vector<double> row_sums(static_cast<std::size_t>(a.rows()));
  for_each_chunk(a.rows(), exec, [&](Eigen::Index, Eigen::Index begin, Eigen::Index end) {
    const Mat block = a.middleRows(begin, end - begin);
    // |a - b|^2 = |a|^2 + |b|^2 - 2 a.b
    Mat d2 = -2.0 * block * b.transpose();
    d2.colwise() += block.rowwise().squaredNorm();
    d2.rowwise() += b_sq.transpose();
    Eigen::ArrayXXd k = (d2.array().max(0.0) * scale).exp();
    for (Eigen::Index i = begin; i < end; ++i) {
      if (skip_diagonal) k(i - begin, i) = 0.0;
      row_sums[static_cast<std::size_t>(i)] = k.row(i - begin).sum();
    }
  }, 64);
  return pairwise_sum(row_sums);
}

double gaussian_kernel_sum_reference(const Mat& a, const Mat& b, double bandwidth, bool skip_diagonal) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      if (skip_diagonal && i == j) continue;
      s += std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * bandwidth * bandwidth));
    }
  return s;
}

}  // namespace gjs::kernels
