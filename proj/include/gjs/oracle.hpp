#pragma once

// Independent estimates of the divergences: plain Monte Carlo (sampling
// always from the left argument of each KL term) and 1-D adaptive Simpson
// quadrature. Nothing here calls the closed forms in divergence.hpp, except
// that Gaussian handles get their geometric intermediate from
// intermediate_full.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gjs/divergence.hpp"
#include "gjs/gaussian.hpp"

namespace gjs {

struct DensityHandle {
  std::function<double(const Vec&)> log_pdf;
  std::function<Mat(std::int64_t, std::uint64_t)> sampler;
  Eigen::Index dim = 0;
  // Optional batched log density over the rows of a matrix.
  std::function<void(const Mat&, std::span<double>)> log_pdf_rows;
  // Set for Gaussian handles; enables the closed-form geometric intermediate.
  std::optional<FullGaussian> gaussian;
  // Integration box used when quadrature needs one.
  Vec lo;
  Vec hi;

  void evaluate(const Mat& points, std::span<double> out) const;
};

DensityHandle gaussian_handle(const FullGaussian& g);

// Finite Gaussian mixture; the standard non-Gaussian test density.
DensityHandle mixture_handle(std::vector<double> weights, std::vector<FullGaussian> components);

// Normalized geometric mean p^(1-w) q^w, w = intermediate_skew(alpha, conv).
// Gaussian pairs use intermediate_full; other pairs are normalized by
// quadrature (dims <= 2) and sampled by rejection from (p + q) / 2.
DensityHandle geometric_mean_handle(const DensityHandle& p, const DensityHandle& q, double alpha,
                                    SkewConvention conv);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

// E_p[log p - log q]
McEstimate mc_kl(const DensityHandle& p, const DensityHandle& q, std::int64_t n, std::uint64_t seed);
// 1/2 KL(p || m) + 1/2 KL(q || m), m = (p + q) / 2. Each term uses n samples.
McEstimate mc_js(const DensityHandle& p, const DensityHandle& q, std::int64_t n, std::uint64_t seed);
// lam KL(p || m) + (1 - lam) KL(q || m), m = (1 - lam) p + lam q.
McEstimate mc_lambda(const DensityHandle& p, const DensityHandle& q, double lam, std::int64_t n,
                     std::uint64_t seed);
// Geometric JS (dual = false) or its dual, estimated by sampling.
McEstimate mc_gjs(const DensityHandle& p, const DensityHandle& q, double alpha, SkewConvention conv, bool dual,
                  std::int64_t n, std::uint64_t seed);

// Dispatch on spec.family (KLForward = KL(p||q), KLReverse = KL(q||p)).
McEstimate mc_divergence(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec,
                         std::int64_t n, std::uint64_t seed);

// Adaptive Simpson on [lo, hi] to absolute tolerance `tol`. Throws
// QuadratureError if the recursion limit is hit before the tolerance is met.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol,
                        int max_depth = 48);

// Composite Simpson rule over equally spaced samples (odd count).
double simpson_sum(std::span<const double> y, double h);

// Pointwise integrand of spec.family for 1-D densities, together with the
// "mean" density the family compares against (arithmetic mixture, geometric
// intermediate, or the reference density for plain KL).
struct Integrand1d {
  std::function<double(double)> integrand;
  std::function<double(double)> mean_density;
};
Integrand1d divergence_integrand_1d(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec);

double quad_divergence_1d(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec, double lo,
                          double hi, double tol);

// Default integration range: envelope of both supports (mu +- 10 sigma for
// Gaussians).
std::pair<double, double> default_bounds_1d(const DensityHandle& p, const DensityHandle& q);

struct IntegrandTable {
  std::vector<double> x, p, q, mean_density, integrand;
};
// `points` equally spaced nodes on [lo, hi], both ends included.
IntegrandTable tabulate_integrand(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec,
                                  double lo, double hi, int points);
void write_integrand_csv(const IntegrandTable& table, const std::string& path);

}  // namespace gjs
