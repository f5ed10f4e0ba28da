#include "gjs/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gjs/error.hpp"
#include "gjs/io.hpp"
#include "gjs/kernels.hpp"
#include "gjs/rng.hpp"

namespace gjs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

void require_same_dim(const DensityHandle& p, const DensityHandle& q) {
  if (p.dim != q.dim)
    throw DimensionError("densities have dimensions " + std::to_string(p.dim) + " and " + std::to_string(q.dim));
}

std::vector<double> evaluate(const DensityHandle& h, const Mat& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  h.evaluate(x, out);
  return out;
}

Mat draw(const DensityHandle& h, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample count must be >= 1");
  Mat x = h.sampler(n, seed);
  if (x.rows() != n || x.cols() != h.dim) throw DimensionError("sampler returned a matrix of the wrong shape");
  return x;
}

// Integrand values must be finite; report the first offending point.
void check_finite(const std::vector<double>& values, const Mat& points, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << what << ": non-finite integrand " << values[i] << " at x = ["
         << points.row(static_cast<Eigen::Index>(i)).format(Eigen::IOFormat(17, Eigen::DontAlignCols, ", ", ", "))
         << "]";
      throw NumericalError(os.str());
    }
  }
}

McEstimate to_estimate(const std::vector<double>& values, std::int64_t n, std::uint64_t seed) {
  const auto s = kernels::mean_and_std_error(values);
  return McEstimate{s.mean, s.std_error, n, seed};
}

// a * A + b * B for independent estimates.
McEstimate combine(double a, const McEstimate& A, double b, const McEstimate& B, std::uint64_t seed) {
  McEstimate r;
  r.value = a * A.value + b * B.value;
  r.std_error = std::sqrt(a * a * A.std_error * A.std_error + b * b * B.std_error * B.std_error);
  r.n_samples = A.n_samples;
  r.seed = seed;
  return r;
}

// E_left[ log left - log mix ], mix = exp(log_w1 + log a) + exp(log_w2 + log b)
McEstimate mc_to_mixture(const DensityHandle& left, const DensityHandle& a, double wa, const DensityHandle& b,
                         double wb, std::int64_t n, std::uint64_t seed) {
  const Mat x = draw(left, n, seed);
  const auto l_left = evaluate(left, x);
  const auto la = evaluate(a, x);
  const auto lb = evaluate(b, x);
  const double lwa = wa > 0.0 ? std::log(wa) : kNegInf;
  const double lwb = wb > 0.0 ? std::log(wb) : kNegInf;
  std::vector<double> f(l_left.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = l_left[i] - log_add_exp(lwa + la[i], lwb + lb[i]);
  check_finite(f, x, "mixture KL");
  return to_estimate(f, n, seed);
}

double normalizer_1d(const std::function<double(double)>& unnorm, double lo, double hi) {
  // Scale-aware tolerance: the unnormalized mass is O(1) for densities.
  return adaptive_simpson(unnorm, lo, hi, 1e-13);
}

double normalizer_2d(const std::function<double(double, double)>& unnorm, const Vec& lo, const Vec& hi) {
  auto inner = [&](double x) {
    return adaptive_simpson([&](double y) { return unnorm(x, y); }, lo(1), hi(1), 1e-12);
  };
  return adaptive_simpson(inner, lo(0), hi(0), 1e-10);
}

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth, bool& ok) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) {
    ok = false;
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok);
}

}  // namespace

void DensityHandle::evaluate(const Mat& points, std::span<double> out) const {
  if (points.cols() != dim) throw DimensionError("points do not match density dimension");
  if (log_pdf_rows) {
    log_pdf_rows(points, out);
    return;
  }
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out[static_cast<std::size_t>(i)] = log_pdf(Vec(points.row(i).transpose()));
}

DensityHandle gaussian_handle(const FullGaussian& g) {
  DensityHandle h;
  h.dim = g.dim();
  h.gaussian = g;
  h.log_pdf = [g](const Vec& x) { return gjs::log_pdf(g, x); };
  h.log_pdf_rows = [g](const Mat& x, std::span<double> out) { kernels::log_pdf_rows(g, x, out); };
  h.sampler = [g](std::int64_t n, std::uint64_t seed) { return sample(g, n, seed); };
  const Vec sd = g.sigma().diagonal().cwiseSqrt();
  h.lo = g.mu() - 10.0 * sd;
  h.hi = g.mu() + 10.0 * sd;
  return h;
}

DensityHandle mixture_handle(std::vector<double> weights, std::vector<FullGaussian> components) {
  if (weights.empty() || weights.size() != components.size())
    throw InputError("mixture needs one weight per component");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InputError("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("mixture weights must sum to 1");
  const Eigen::Index d = components.front().dim();
  for (const auto& c : components)
    if (c.dim() != d) throw DimensionError("mixture components differ in dimension");

  DensityHandle h;
  h.dim = d;
  h.log_pdf = [weights, components](const Vec& x) {
    double acc = kNegInf;
    for (std::size_t k = 0; k < weights.size(); ++k)
      acc = log_add_exp(acc, std::log(weights[k]) + gjs::log_pdf(components[k], x));
    return acc;
  };
  h.sampler = [weights, components](std::int64_t n, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, 0));
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    Mat x(n, components.front().dim());
    const Mat eps = standard_normal(n, components.front().dim(), derive_seed(seed, 1));
    for (std::int64_t i = 0; i < n; ++i) {
      const auto& c = components[pick(rng)];
      x.row(i) = (c.mu() + c.chol_lower() * eps.row(i).transpose()).transpose();
    }
    return x;
  };
  h.lo = Vec::Constant(d, std::numeric_limits<double>::infinity());
  h.hi = Vec::Constant(d, -std::numeric_limits<double>::infinity());
  for (const auto& c : components) {
    const Vec sd = c.sigma().diagonal().cwiseSqrt();
    h.lo = h.lo.cwiseMin(c.mu() - 10.0 * sd);
    h.hi = h.hi.cwiseMax(c.mu() + 10.0 * sd);
  }
  return h;
}

DensityHandle geometric_mean_handle(const DensityHandle& p, const DensityHandle& q, double alpha,
                                    SkewConvention conv) {
  require_same_dim(p, q);
  check_skew(alpha);
  if (p.gaussian && q.gaussian) return gaussian_handle(intermediate_full(*p.gaussian, *q.gaussian, alpha, conv));
  if (p.dim > 2)
    throw UnsupportedError("geometric mean of non-Gaussian densities is only supported in dimension <= 2");

  const double w = intermediate_skew(alpha, conv);
  const Vec lo = p.lo.cwiseMin(q.lo);
  const Vec hi = p.hi.cwiseMax(q.hi);
  auto log_unnorm = [p, q, w](const Vec& x) { return (1.0 - w) * p.log_pdf(x) + w * q.log_pdf(x); };
  double z = 0.0;
  if (p.dim == 1) {
    z = normalizer_1d([&](double x) { return std::exp(log_unnorm(Vec::Constant(1, x))); }, lo(0), hi(0));
  } else {
    z = normalizer_2d([&](double x, double y) { return std::exp(log_unnorm(Vec{{x, y}})); }, lo, hi);
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("geometric mean normalizer is not positive");
  const double log_z = std::log(z);

  DensityHandle h;
  h.dim = p.dim;
  h.lo = lo;
  h.hi = hi;
  h.log_pdf = [log_unnorm, log_z](const Vec& x) { return log_unnorm(x) - log_z; };
  // p^(1-w) q^w <= (1-w) p + w q <= p + q = 2 * mixture, so accepting a
  // mixture draw with probability p^(1-w) q^w / (p + q) is exact.
  h.sampler = [p, q, w](std::int64_t n, std::uint64_t seed) {
    Mat out(n, p.dim);
    std::int64_t filled = 0;
    std::uint64_t round = 0;
    Rng rng = make_rng(derive_seed(seed, 0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (filled < n) {
      const std::int64_t batch = std::max<std::int64_t>(64, 2 * (n - filled));
      const Mat xp = p.sampler(batch, derive_seed(seed, 2 * round + 1));
      const Mat xq = q.sampler(batch, derive_seed(seed, 2 * round + 2));
      ++round;
      for (std::int64_t i = 0; i < batch && filled < n; ++i) {
        const Vec x = (unif(rng) < 0.5 ? xp.row(i) : xq.row(i)).transpose();
        const double lp = p.log_pdf(x);
        const double lq = q.log_pdf(x);
        const double log_accept = (1.0 - w) * lp + w * lq - log_add_exp(lp, lq);
        if (std::log(unif(rng)) < log_accept) out.row(filled++) = x.transpose();
      }
      if (round > 100000) throw NumericalError("rejection sampler for the geometric mean is not accepting");
    }
    return out;
  };
  return h;
}

McEstimate mc_kl(const DensityHandle& p, const DensityHandle& q, std::int64_t n, std::uint64_t seed) {
  require_same_dim(p, q);
  const Mat x = draw(p, n, seed);
  const auto lp = evaluate(p, x);
  const auto lq = evaluate(q, x);
  std::vector<double> f(lp.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = lp[i] - lq[i];
  check_finite(f, x, "KL");
  return to_estimate(f, n, seed);
}

McEstimate mc_js(const DensityHandle& p, const DensityHandle& q, std::int64_t n, std::uint64_t seed) {
  return mc_lambda(p, q, 0.5, n, seed);
}

McEstimate mc_lambda(const DensityHandle& p, const DensityHandle& q, double lam, std::int64_t n,
                     std::uint64_t seed) {
  require_same_dim(p, q);
  check_skew(lam, "lambda");
  const McEstimate zero{0.0, 0.0, n, seed};
  const McEstimate a = lam > 0.0 ? mc_to_mixture(p, p, 1.0 - lam, q, lam, n, derive_seed(seed, 1)) : zero;
  const McEstimate b = lam < 1.0 ? mc_to_mixture(q, p, 1.0 - lam, q, lam, n, derive_seed(seed, 2)) : zero;
  return combine(lam, a, 1.0 - lam, b, seed);
}

McEstimate mc_gjs(const DensityHandle& p, const DensityHandle& q, double alpha, SkewConvention conv, bool dual,
                  std::int64_t n, std::uint64_t seed) {
  require_same_dim(p, q);
  const DensityHandle m = geometric_mean_handle(p, q, alpha, conv);
  if (dual) {
    const Mat x = draw(m, n, derive_seed(seed, 3));
    const auto lm = evaluate(m, x);
    const auto lp = evaluate(p, x);
    const auto lq = evaluate(q, x);
    std::vector<double> f(lm.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (1.0 - alpha) * (lm[i] - lp[i]) + alpha * (lm[i] - lq[i]);
    check_finite(f, x, "dual geometric JS");
    McEstimate e = to_estimate(f, n, seed);
    return e;
  }
  const McEstimate zero{0.0, 0.0, n, seed};
  const McEstimate a = alpha < 1.0 ? mc_kl(p, m, n, derive_seed(seed, 1)) : zero;
  const McEstimate b = alpha > 0.0 ? mc_kl(q, m, n, derive_seed(seed, 2)) : zero;
  return combine(1.0 - alpha, a, alpha, b, seed);
}

McEstimate mc_divergence(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec,
                         std::int64_t n, std::uint64_t seed) {
  spec.validate();
  switch (spec.family) {
    case Family::KLForward: return mc_kl(p, q, n, seed);
    case Family::KLReverse: return mc_kl(q, p, n, seed);
    case Family::JS: return mc_js(p, q, n, seed);
    case Family::Lambda: return mc_lambda(p, q, spec.lambda_skew, n, seed);
    case Family::GJS: return mc_gjs(p, q, spec.alpha, spec.convention, false, n, seed);
    case Family::GJSDual: return mc_gjs(p, q, spec.alpha, spec.convention, true, n, seed);
    case Family::MMD: break;
  }
  throw UnsupportedError("MMD has no density-based Monte Carlo estimator; use mmd() on samples");
}

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol, int max_depth) {
  if (!(hi > lo)) throw InputError("quadrature needs lo < hi");
  if (!(tol > 0.0)) throw InputError("quadrature tolerance must be > 0");
  // Start from 16 panels so narrow peaks are not missed by the first probe.
  constexpr int kPanels = 16;
  const double width = (hi - lo) / kPanels;
  double total = 0.0;
  bool ok = true;
  for (int k = 0; k < kPanels; ++k) {
    const double a = lo + k * width;
    const double b = k + 1 == kPanels ? hi : a + width;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_rec(f, a, b, fa, fm, fb, whole, tol / kPanels, max_depth, ok);
  }
  if (!std::isfinite(total)) throw QuadratureError("integrand is not finite on the interval", total);
  if (!ok) throw QuadratureError("adaptive Simpson hit its recursion limit before reaching tolerance", total);
  return total;
}

double simpson_sum(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  if (n < 3 || n % 2 == 0) throw InputError("Simpson's rule needs an odd number (>= 3) of samples");
  double s = y.front() + y.back();
  for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  return s * h / 3.0;
}

Integrand1d divergence_integrand_1d(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec) {
  require_same_dim(p, q);
  if (p.dim != 1) throw DimensionError("1-D integrand requested for dimension " + std::to_string(p.dim));
  spec.validate();
  auto lp = [p](double x) { return p.log_pdf(Vec::Constant(1, x)); };
  auto lq = [q](double x) { return q.log_pdf(Vec::Constant(1, x)); };
  Integrand1d r;
  switch (spec.family) {
    case Family::KLForward:
      r.integrand = [lp, lq](double x) {
        const double a = lp(x);
        return std::exp(a) * (a - lq(x));
      };
      r.mean_density = [lq](double x) { return std::exp(lq(x)); };
      return r;
    case Family::KLReverse:
      r.integrand = [lp, lq](double x) {
        const double b = lq(x);
        return std::exp(b) * (b - lp(x));
      };
      r.mean_density = [lp](double x) { return std::exp(lp(x)); };
      return r;
    case Family::JS:
    case Family::Lambda: {
      const double lam = spec.family == Family::JS ? 0.5 : spec.lambda_skew;
      auto lm = [lp, lq, lam](double x) {
        const double a = lam < 1.0 ? std::log(1.0 - lam) + lp(x) : kNegInf;
        const double b = lam > 0.0 ? std::log(lam) + lq(x) : kNegInf;
        return log_add_exp(a, b);
      };
      r.integrand = [lp, lq, lm, lam](double x) {
        const double a = lp(x);
        const double b = lq(x);
        const double m = lm(x);
        return lam * std::exp(a) * (a - m) + (1.0 - lam) * std::exp(b) * (b - m);
      };
      r.mean_density = [lm](double x) { return std::exp(lm(x)); };
      return r;
    }
    case Family::GJS:
    case Family::GJSDual: {
      const DensityHandle m = geometric_mean_handle(p, q, spec.alpha, spec.convention);
      auto lg = [m](double x) { return m.log_pdf(Vec::Constant(1, x)); };
      const double alpha = spec.alpha;
      if (spec.family == Family::GJS) {
        r.integrand = [lp, lq, lg, alpha](double x) {
          const double a = lp(x);
          const double b = lq(x);
          const double g = lg(x);
          return (1.0 - alpha) * std::exp(a) * (a - g) + alpha * std::exp(b) * (b - g);
        };
      } else {
        r.integrand = [lp, lq, lg, alpha](double x) {
          const double g = lg(x);
          return std::exp(g) * ((1.0 - alpha) * (g - lp(x)) + alpha * (g - lq(x)));
        };
      }
      r.mean_density = [lg](double x) { return std::exp(lg(x)); };
      return r;
    }
    case Family::MMD: break;
  }
  throw UnsupportedError("MMD has no pointwise integrand");
}

double quad_divergence_1d(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec, double lo,
                          double hi, double tol) {
  const auto f = divergence_integrand_1d(p, q, spec);
  return adaptive_simpson(f.integrand, lo, hi, tol);
}

std::pair<double, double> default_bounds_1d(const DensityHandle& p, const DensityHandle& q) {
  require_same_dim(p, q);
  if (p.dim != 1) throw DimensionError("1-D bounds requested for dimension " + std::to_string(p.dim));
  return {std::min(p.lo(0), q.lo(0)), std::max(p.hi(0), q.hi(0))};
}

IntegrandTable tabulate_integrand(const DensityHandle& p, const DensityHandle& q, const DivergenceSpec& spec,
                                  double lo, double hi, int points) {
  if (points < 2) throw InputError("integrand table needs at least 2 points");
  const auto f = divergence_integrand_1d(p, q, spec);
  IntegrandTable t;
  const double h = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double x = i + 1 == points ? hi : lo + i * h;
    t.x.push_back(x);
    t.p.push_back(std::exp(p.log_pdf(Vec::Constant(1, x))));
    t.q.push_back(std::exp(q.log_pdf(Vec::Constant(1, x))));
    t.mean_density.push_back(f.mean_density(x));
    t.integrand.push_back(f.integrand(x));
  }
  return t;
}

void write_integrand_csv(const IntegrandTable& table, const std::string& path) {
  write_numeric_csv(path, {"x", "p", "q", "mean_density", "integrand"},
                    {table.x, table.p, table.q, table.mean_density, table.integrand});
}

}  // namespace gjs
