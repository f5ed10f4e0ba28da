#pragma once

// Data-parallel inner loops shared by the oracle, the 2-D fitter and the MMD
// regularizer. Every kernel splits its rows into fixed-size chunks and
// reduces chunk results in a fixed order, so Exec::Serial and
// Exec::Parallel produce bit-identical results for any thread count. The
// *_reference functions are straightforward per-row loops kept for testing.

#include <Eigen/Dense>
#include <span>

#include "gjs/gaussian.hpp"

namespace gjs::kernels {

enum class Exec { Serial, Parallel };

inline constexpr Eigen::Index kChunkRows = 2048;

// Deterministic pairwise (tree) summation.
double pairwise_sum(std::span<const double> values);

struct MeanStats {
  double mean = 0.0;
  double std_error = 0.0;
};

// Sample mean and standard error of the mean (sample std / sqrt(n)).
MeanStats mean_and_std_error(std::span<const double> values);

// out[i] = log N(x_i; g) for every row x_i of `points`.
void log_pdf_rows(const FullGaussian& g, const Mat& points, std::span<double> out, Exec exec = Exec::Parallel);
void log_pdf_rows_reference(const FullGaussian& g, const Mat& points, std::span<double> out);

// Product-kernel Gaussian KDE with per-coordinate bandwidths:
// out[i] = log (1/N) sum_j prod_d N(x_id; c_jd, h_d^2).
void kde_log_density(const Mat& centers, const Vec& bandwidth, const Mat& points, std::span<double> out,
                     Exec exec = Exec::Parallel);
void kde_log_density_reference(const Mat& centers, const Vec& bandwidth, const Mat& points,
                               std::span<double> out);

// sum_{i,j} exp(-|a_i - b_j|^2 / (2 h^2)), skipping i == j when
// `skip_diagonal` (requires a and b to have equal row counts).
double gaussian_kernel_sum(const Mat& a, const Mat& b, double bandwidth, bool skip_diagonal,
                           Exec exec = Exec::Parallel);
double gaussian_kernel_sum_reference(const Mat& a, const Mat& b, double bandwidth, bool skip_diagonal);

}  // namespace gjs::kernels
