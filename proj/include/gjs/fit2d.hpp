#pragma once

// Fits a single bivariate Gaussian to samples by gradient descent on a
// sample-based divergence estimate.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gjs/divergence.hpp"
#include "gjs/gaussian.hpp"
#include "gjs/io.hpp"
#include "gjs/oracle.hpp"

namespace gjs {

struct MixtureComponent {
  double weight = 1.0;
  Vec mean;
  Mat cov;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;

  void validate() const;
  DensityHandle handle() const;

  // 0.7 N((3, 0), I) + 0.3 N((-3, 0), diag(1, 2)); dominant mode (3, 0).
  static MixtureSpec benchmark();
};

json to_json(const MixtureSpec& spec);
MixtureSpec mixture_from_json(const json& j);

// Ancestral sampling, deterministic per seed.
Mat mixture_sample(const MixtureSpec& spec, std::int64_t n, std::uint64_t seed);

// mu plus the lower Cholesky factor with log-parameterized diagonal:
// theta = (mu_1, mu_2, log L11, L21, log L22).
struct FitParams {
  Vec mu = Vec::Zero(2);
  std::array<double, 3> chol_lower{0.0, 0.0, 0.0};

  static constexpr int kSize = 5;

  Mat cholesky() const;
  FullGaussian gaussian() const;
  std::array<double, kSize> to_array() const;
  static FitParams from_array(const std::array<double, kSize>& theta);
  // Exact inverse of gaussian() for a PD covariance.
  static FitParams from_gaussian(const FullGaussian& g);
};

// Per-coordinate Scott's rule bandwidth: sd_d * n^(-1/6) in two dimensions.
Vec scott_bandwidth(const Mat& samples);

// Divergence between the data distribution (left argument, p) and a model
// Gaussian (right argument, q). Data expectations average over the samples;
// model expectations use reparameterized draws mu + L eps with eps fixed at
// construction, so the objective is a deterministic smooth function of the
// model parameters. The data log-density comes from a Gaussian KDE built once
// (Scott bandwidth) or, if `true_density` is given, from that mixture.
class EmpiricalObjective {
 public:
  EmpiricalObjective(Mat samples, DivergenceSpec spec, std::int64_t n_model_samples, std::uint64_t seed,
                     std::optional<MixtureSpec> true_density = std::nullopt);

  double operator()(const FullGaussian& g) const;
  double operator()(const FitParams& params) const { return (*this)(params.gaussian()); }

  const DivergenceSpec& spec() const { return spec_; }

  // log density of the data distribution at the rows of `x`.
  std::vector<double> data_log_density(const Mat& x) const;

 private:
  Mat samples_;
  DivergenceSpec spec_;
  Mat eps_;
  Vec bandwidth_;
  std::optional<DensityHandle> true_density_;
  std::vector<double> data_lp_;  // data log-density at the samples
};

double empirical_divergence(const Mat& samples, const FullGaussian& g, const DivergenceSpec& spec,
                            std::int64_t n_model_samples, std::uint64_t seed);

struct FitOptions {
  double lr = 0.05;
  int iters = 500;
  std::int64_t n_model_samples = 2048;
  std::uint64_t seed = 0;
  double fd_step = 1e-4;  // relative to max(|theta_i|, 1)
  bool use_true_density = false;
};

struct FitIteration {
  double loss = 0.0;
  FitParams params;
};

struct FitTrace {
  std::vector<FitIteration> iterations;
  FitParams final_params;
  DivergenceSpec spec{Family::KLForward, SkewConvention::Primed};
  std::uint64_t seed = 0;
  // Set when the loss went non-finite; the trace holds the iterations before it.
  std::optional<std::string> aborted;
};

json to_json(const FitTrace& trace);
FitTrace fit_trace_from_json(const json& j);

// Central finite-difference gradient with step h_i = step * max(|theta_i|, 1).
std::array<double, FitParams::kSize> fd_gradient(const EmpiricalObjective& objective, const FitParams& params,
                                                 double step);

// Gradient descent from mu = sample mean, Sigma = I. Needs >= 100 samples.
FitTrace fit(const Mat& samples, const DivergenceSpec& spec, const FitOptions& opt,
             const std::optional<MixtureSpec>& true_density = std::nullopt);

struct Grid2d {
  double x_lo = -6.0, x_hi = 6.0, y_lo = -6.0, y_hi = 6.0;
  int nx = 101, ny = 101;
};

// Density of g on the grid nodes (ends included), rows (x, y, density) with
// x varying slowest.
struct LevelSetTable {
  std::vector<double> x, y, density;
};
LevelSetTable level_set_dump(const FullGaussian& g, const Grid2d& grid);
void write_level_set_csv(const LevelSetTable& table, const std::string& path);

}  // namespace gjs
