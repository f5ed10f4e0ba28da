#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace gjs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Which weighted geometric mean sits between the two arguments.
//   Original: N_a ∝ p^(1-a) q^a
//   Primed:   N_a ∝ p^a q^(1-a), i.e. the Original intermediate at 1-a.
// The outer KL weights (1-a, a) are the same in both conventions.
enum class SkewConvention { Original, Primed };

// Skew actually used inside the intermediate distribution.
inline double intermediate_skew(double alpha, SkewConvention conv) {
  return conv == SkewConvention::Original ? alpha : 1.0 - alpha;
}

const char* to_string(SkewConvention conv);
SkewConvention parse_convention(const std::string& name);

// N(mu, diag(exp(log_var))). Storing log-variances keeps every value of the
// type a valid distribution.
class DiagonalGaussian {
 public:
  DiagonalGaussian(Vec mu, Vec log_var);

  static DiagonalGaussian standard(Eigen::Index n);

  const Vec& mu() const { return mu_; }
  const Vec& log_var() const { return log_var_; }
  Vec variance() const { return log_var_.array().exp().matrix(); }
  Eigen::Index dim() const { return mu_.size(); }

 private:
  Vec mu_;
  Vec log_var_;
};

// N(mu, sigma) with a cached Cholesky factor. Construction fails on an
// asymmetric or non positive-definite covariance.
class FullGaussian {
 public:
  FullGaussian(Vec mu, Mat sigma);

  static FullGaussian from_diagonal(const DiagonalGaussian& g);
  static FullGaussian standard(Eigen::Index n);

  const Vec& mu() const { return mu_; }
  const Mat& sigma() const { return sigma_; }
  const Mat& chol_lower() const { return chol_; }
  double log_det() const { return log_det_; }
  Eigen::Index dim() const { return mu_.size(); }

  // sigma^{-1} b via the cached factor.
  Vec solve(const Vec& b) const;
  Mat solve(const Mat& b) const;
  Mat precision() const;

  // (x - mu)^T sigma^{-1} (x - mu)
  double mahalanobis_sq(const Vec& x) const;

 private:
  Vec mu_;
  Mat sigma_;
  Mat chol_;
  double log_det_ = 0.0;
};

double condition_number(const Mat& symmetric);

double log_pdf(const FullGaussian& g, const Vec& x);
double log_pdf(const DiagonalGaussian& g, const Vec& x);

// count x n matrix of i.i.d. draws mu + L eps. Deterministic per seed.
Mat sample(const FullGaussian& g, std::int64_t count, std::uint64_t seed);
Mat sample(const DiagonalGaussian& g, std::int64_t count, std::uint64_t seed);

// count x n standard normal draws. All sampling in the library funnels
// through this so a seed fully determines the noise.
Mat standard_normal(std::int64_t count, Eigen::Index n, std::uint64_t seed);

// Geometric-mean Gaussian between g1 and g2 (matrix harmonic barycenter).
FullGaussian intermediate_full(const FullGaussian& g1, const FullGaussian& g2, double alpha,
                               SkewConvention conv);

// Same, with g2 fixed to N(0, I).
DiagonalGaussian intermediate_diag(const DiagonalGaussian& g, double alpha, SkewConvention conv);

void check_skew(double alpha, const char* name = "alpha");

}  // namespace gjs
