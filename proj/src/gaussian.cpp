#include "gjs/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gjs/error.hpp"
#include "gjs/rng.hpp"

namespace gjs {

namespace {

constexpr double kSymmetryTol = 1e-12;

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

}  // namespace

const char* to_string(SkewConvention conv) {
  return conv == SkewConvention::Original ? "original" : "primed";
}

SkewConvention parse_convention(const std::string& name) {
  if (name == "original") return SkewConvention::Original;
  if (name == "primed") return SkewConvention::Primed;
  throw InputError("unknown convention '" + name + "' (expected original|primed)");
}

void check_skew(double alpha, const char* name) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InputError(std::string(name) + " must lie in [0, 1], got " + std::to_string(alpha));
}

DiagonalGaussian::DiagonalGaussian(Vec mu, Vec log_var) : mu_(std::move(mu)), log_var_(std::move(log_var)) {
  if (mu_.size() < 1) throw DimensionError("DiagonalGaussian needs dimension >= 1");
  if (mu_.size() != log_var_.size())
    throw DimensionError("mu has " + std::to_string(mu_.size()) + " entries, log_var has " +
                         std::to_string(log_var_.size()));
  require_finite(mu_, "mu");
  require_finite(log_var_, "log_var");
}

DiagonalGaussian DiagonalGaussian::standard(Eigen::Index n) {
  return DiagonalGaussian(Vec::Zero(n), Vec::Zero(n));
}

double condition_number(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetric, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.cwiseAbs().minCoeff();
  const double hi = ev.cwiseAbs().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

FullGaussian::FullGaussian(Vec mu, Mat sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
  const auto n = mu_.size();
  if (n < 1) throw DimensionError("FullGaussian needs dimension >= 1");
  if (sigma_.rows() != n || sigma_.cols() != n)
    throw DimensionError("covariance is " + std::to_string(sigma_.rows()) + "x" +
                         std::to_string(sigma_.cols()) + ", mean has " + std::to_string(n) + " entries");
  require_finite(mu_, "mu");
  if (!sigma_.allFinite()) throw InputError("covariance has non-finite entries");
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol)
    throw InputError("covariance is not symmetric");

  Eigen::LLT<Mat> llt(sigma_);
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError("covariance is not positive definite", condition_number(sigma_));
  chol_ = llt.matrixL();
  if ((chol_.diagonal().array() <= 0.0).any())
    throw SingularMatrixError("covariance is not positive definite", condition_number(sigma_));
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

FullGaussian FullGaussian::from_diagonal(const DiagonalGaussian& g) {
  return FullGaussian(g.mu(), g.variance().asDiagonal());
}

FullGaussian FullGaussian::standard(Eigen::Index n) { return FullGaussian(Vec::Zero(n), Mat::Identity(n, n)); }

Vec FullGaussian::solve(const Vec& b) const {
  Vec y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Mat FullGaussian::solve(const Mat& b) const {
  Mat y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Mat FullGaussian::precision() const {
  Mat p = solve(Mat(Mat::Identity(dim(), dim())));
  return 0.5 * (p + p.transpose());
}

double FullGaussian::mahalanobis_sq(const Vec& x) const {
  Vec y = chol_.triangularView<Eigen::Lower>().solve(x - mu_);
  return y.squaredNorm();
}

double log_pdf(const FullGaussian& g, const Vec& x) {
  if (x.size() != g.dim())
    throw DimensionError("point has " + std::to_string(x.size()) + " entries, density has dimension " +
                         std::to_string(g.dim()));
  const double n = static_cast<double>(g.dim());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + g.log_det() + g.mahalanobis_sq(x));
}

double log_pdf(const DiagonalGaussian& g, const Vec& x) {
  if (x.size() != g.dim())
    throw DimensionError("point has " + std::to_string(x.size()) + " entries, density has dimension " +
                         std::to_string(g.dim()));
  const auto lv = g.log_var().array();
  const auto d = (x - g.mu()).array();
  return -0.5 * (static_cast<double>(g.dim()) * std::log(2.0 * std::numbers::pi) + lv.sum() +
                 (d.square() * (-lv).exp()).sum());
}

Mat standard_normal(std::int64_t count, Eigen::Index n, std::uint64_t seed) {
  if (count < 1) throw InputError("sample count must be >= 1");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat eps(count, n);
  // Row-major fill order so a prefix of rows is stable when count grows.
  for (std::int64_t i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < n; ++j) eps(i, j) = normal(rng);
  return eps;
}

Mat sample(const FullGaussian& g, std::int64_t count, std::uint64_t seed) {
  Mat eps = standard_normal(count, g.dim(), seed);
  Mat x = eps * g.chol_lower().transpose();
  x.rowwise() += g.mu().transpose();
  return x;
}

Mat sample(const DiagonalGaussian& g, std::int64_t count, std::uint64_t seed) {
  Mat eps = standard_normal(count, g.dim(), seed);
  const Vec sd = (0.5 * g.log_var().array()).exp().matrix();
  Mat x = eps * sd.asDiagonal();
  x.rowwise() += g.mu().transpose();
  return x;
}

FullGaussian intermediate_full(const FullGaussian& g1, const FullGaussian& g2, double alpha,
                               SkewConvention conv) {
  check_skew(alpha);
  if (g1.dim() != g2.dim())
    throw DimensionError("intermediate of dimensions " + std::to_string(g1.dim()) + " and " +
                         std::to_string(g2.dim()));
  const double w = intermediate_skew(alpha, conv);
  const Mat p1 = g1.precision();
  const Mat p2 = g2.precision();
  const Mat prec = (1.0 - w) * p1 + w * p2;
  Eigen::LLT<Mat> llt(prec);
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError("intermediate precision is singular", condition_number(prec));
  Mat sigma = llt.solve(Mat::Identity(g1.dim(), g1.dim()));
  sigma = 0.5 * (sigma + sigma.transpose());
  Vec mu = llt.solve((1.0 - w) * (p1 * g1.mu()) + w * (p2 * g2.mu()));
  return FullGaussian(std::move(mu), std::move(sigma));
}

DiagonalGaussian intermediate_diag(const DiagonalGaussian& g, double alpha, SkewConvention conv) {
  check_skew(alpha);
  const double w = intermediate_skew(alpha, conv);
  const auto s = g.variance().array();
  // sigma_a^2 = s / ((1-w) + w s); mu_a = sigma_a^2 (1-w) mu / s = (1-w) mu / ((1-w) + w s)
  const Eigen::ArrayXd denom = (1.0 - w) + w * s;
  Vec log_var = (g.log_var().array() - denom.log()).matrix();
  Vec mu = ((1.0 - w) * g.mu().array() / denom).matrix();
  return DiagonalGaussian(std::move(mu), std::move(log_var));
}

}  // namespace gjs
