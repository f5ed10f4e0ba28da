#include "gjs/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gjs/diag_terms.hpp"
#include "gjs/error.hpp"
#include "gjs/kernels.hpp"

namespace gjs {

namespace {

void require_same_dim(const FullGaussian& g1, const FullGaussian& g2) {
  if (g1.dim() != g2.dim())
    throw DimensionError("divergence between dimensions " + std::to_string(g1.dim()) + " and " +
                         std::to_string(g2.dim()));
}

// Expanded weighted-KL form with outer weights (1-a, a) and an arbitrary
// intermediate m: 1/2 [tr(P_m((1-a)S1 + a S2)) + log|S_m| - (1-a)log|S1| - a log|S2|
//                      + (1-a) q_m(mu1) + a q_m(mu2) - n]
double gjs_expanded(const FullGaussian& g1, const FullGaussian& g2, const FullGaussian& m, double alpha) {
  const double n = static_cast<double>(g1.dim());
  const double trace = m.solve(Mat((1.0 - alpha) * g1.sigma() + alpha * g2.sigma())).trace();
  const double logs = m.log_det() - (1.0 - alpha) * g1.log_det() - alpha * g2.log_det();
  const double quad = (1.0 - alpha) * m.mahalanobis_sq(g1.mu()) + alpha * m.mahalanobis_sq(g2.mu());
  return 0.5 * (trace + logs + quad - n);
}

double quad_form(const FullGaussian& g, const Vec& v) { return v.dot(g.solve(v)); }

// Collapsed dual, exact only when the intermediate is the Original one.
double dual_collapsed(const FullGaussian& g1, const FullGaussian& g2, const FullGaussian& m, double alpha) {
  return 0.5 * ((1.0 - alpha) * quad_form(g1, g1.mu()) + alpha * quad_form(g2, g2.mu()) - quad_form(m, m.mu()) +
                (1.0 - alpha) * g1.log_det() + alpha * g2.log_det() - m.log_det());
}

// General expansion of (1-a) KL(m || g1) + a KL(m || g2).
double dual_expanded(const FullGaussian& g1, const FullGaussian& g2, const FullGaussian& m, double alpha) {
  const double n = static_cast<double>(g1.dim());
  const double trace = (1.0 - alpha) * g1.solve(m.sigma()).trace() + alpha * g2.solve(m.sigma()).trace();
  const double logs = (1.0 - alpha) * g1.log_det() + alpha * g2.log_det() - m.log_det();
  const double quad = (1.0 - alpha) * g1.mahalanobis_sq(m.mu()) + alpha * g2.mahalanobis_sq(m.mu());
  return 0.5 * (trace + logs + quad - n);
}

}  // namespace

const char* to_string(Family family) {
  switch (family) {
    case Family::KLForward: return "kl-forward";
    case Family::KLReverse: return "kl-reverse";
    case Family::JS: return "js";
    case Family::Lambda: return "lambda";
    case Family::GJS: return "gjs";
    case Family::GJSDual: return "gjs-dual";
    case Family::MMD: return "mmd";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  for (Family f : {Family::KLForward, Family::KLReverse, Family::JS, Family::Lambda, Family::GJS, Family::GJSDual,
                   Family::MMD})
    if (name == to_string(f)) return f;
  throw InputError("unknown divergence family '" + name + "'");
}

void DivergenceSpec::validate() const {
  check_skew(alpha, "alpha");
  check_skew(lambda_skew, "lambda_skew");
  if (!(weight > 0.0)) throw InputError("weight must be > 0");
  if (!(mmd_bandwidth > 0.0)) throw InputError("mmd_bandwidth must be > 0");
}

double kl_full(const FullGaussian& g1, const FullGaussian& g2) {
  require_same_dim(g1, g2);
  const double n = static_cast<double>(g1.dim());
  const double trace = g2.solve(g1.sigma()).trace();
  const double quad = g2.mahalanobis_sq(g1.mu());
  // Rounding can leave nearly identical arguments a few ulps below zero.
  return std::max(0.0, 0.5 * (trace + g2.log_det() - g1.log_det() + quad - n));
}

double kl_diag_reverse(const DiagonalGaussian& g) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.dim(); ++i) s += diag::kl_reverse(g.mu()(i), g.log_var()(i));
  return s;
}

double kl_diag_forward(const DiagonalGaussian& g) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.dim(); ++i) s += diag::kl_forward(g.mu()(i), g.log_var()(i));
  return s;
}

double gjs_full(const FullGaussian& g1, const FullGaussian& g2, double alpha, SkewConvention conv, GjsForm form) {
  require_same_dim(g1, g2);
  const FullGaussian m = intermediate_full(g1, g2, alpha, conv);
  if (form == GjsForm::Expanded) return gjs_expanded(g1, g2, m, alpha);
  return (1.0 - alpha) * kl_full(g1, m) + alpha * kl_full(g2, m);
}

double gjs_dual_full(const FullGaussian& g1, const FullGaussian& g2, double alpha, SkewConvention conv,
                     GjsForm form) {
  require_same_dim(g1, g2);
  const FullGaussian m = intermediate_full(g1, g2, alpha, conv);
  if (form == GjsForm::Expanded)
    return conv == SkewConvention::Original ? dual_collapsed(g1, g2, m, alpha) : dual_expanded(g1, g2, m, alpha);
  return (1.0 - alpha) * kl_full(m, g1) + alpha * kl_full(m, g2);
}

double gjs_diag(const DiagonalGaussian& g, double alpha, SkewConvention conv) {
  check_skew(alpha);
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.dim(); ++i) s += diag::gjs(g.mu()(i), g.log_var()(i), alpha, conv);
  return s;
}

double gjs_dual_diag(const DiagonalGaussian& g, double alpha, SkewConvention conv) {
  check_skew(alpha);
  double s = 0.0;
  for (Eigen::Index i = 0; i < g.dim(); ++i) s += diag::gjs_dual(g.mu()(i), g.log_var()(i), alpha, conv);
  return s;
}

double gjs_primed_quadratic(const FullGaussian& g1, const FullGaussian& g2, double alpha) {
  check_skew(alpha);
  return (1.0 - alpha) * (1.0 - alpha) * kl_full(g1, g2) + alpha * alpha * kl_full(g2, g1);
}

double log_geometric_normalizer(const FullGaussian& g1, const FullGaussian& g2, double alpha, SkewConvention conv) {
  require_same_dim(g1, g2);
  const FullGaussian m = intermediate_full(g1, g2, alpha, conv);
  // The collapsed dual expression at the intermediate's own skew is the
  // skew Bhattacharyya distance.
  return -dual_collapsed(g1, g2, m, intermediate_skew(alpha, conv));
}

double mmd(const Mat& samples_p, const Mat& samples_q, double bandwidth) {
  if (samples_p.cols() != samples_q.cols()) throw DimensionError("MMD samples differ in dimension");
  if (samples_p.rows() < 2 || samples_q.rows() < 2) throw InputError("MMD needs at least 2 samples per side");
  if (!(bandwidth > 0.0)) throw InputError("MMD bandwidth must be > 0");
  const double m = static_cast<double>(samples_p.rows());
  const double n = static_cast<double>(samples_q.rows());
  const double kxx = kernels::gaussian_kernel_sum(samples_p, samples_p, bandwidth, true);
  const double kyy = kernels::gaussian_kernel_sum(samples_q, samples_q, bandwidth, true);
  const double kxy = kernels::gaussian_kernel_sum(samples_p, samples_q, bandwidth, false);
  return kxx / (m * (m - 1.0)) + kyy / (n * (n - 1.0)) - 2.0 * kxy / (m * n);
}

double median_bandwidth(const Mat& samples_p, const Mat& samples_q) {
  Mat pooled(samples_p.rows() + samples_q.rows(), samples_p.cols());
  pooled << samples_p, samples_q;
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(pooled.rows() * (pooled.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) d.push_back((pooled.row(i) - pooled.row(j)).norm());
  if (d.empty()) throw InputError("median heuristic needs at least two points");
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

double closed_form(const FullGaussian& g1, const FullGaussian& g2, const DivergenceSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::KLForward: return kl_full(g1, g2);
    case Family::KLReverse: return kl_full(g2, g1);
    case Family::GJS: return gjs_full(g1, g2, spec.alpha, spec.convention);
    case Family::GJSDual: return gjs_dual_full(g1, g2, spec.alpha, spec.convention);
    case Family::JS:
    case Family::Lambda:
    case Family::MMD: break;
  }
  throw UnsupportedError(std::string("no closed form for family ") + to_string(spec.family));
}

}  // namespace gjs
