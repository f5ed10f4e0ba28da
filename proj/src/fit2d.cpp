#include "gjs/fit2d.hpp"

#include <cmath>
#include <numbers>

#include "gjs/error.hpp"
#include "gjs/kernels.hpp"
#include "gjs/rng.hpp"

namespace gjs {

namespace {

double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double mean_of(const std::vector<double>& v) { return kernels::pairwise_sum(v) / static_cast<double>(v.size()); }

// log (1/n) sum exp(v_i)
double log_mean_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  std::vector<double> e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = std::exp(v[i] - m);
  return m + std::log(kernels::pairwise_sum(e) / static_cast<double>(v.size()));
}

std::vector<double> gaussian_rows(const FullGaussian& g, const Mat& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  kernels::log_pdf_rows(g, x, out);
  return out;
}

}  // namespace

void MixtureSpec::validate() const {
  if (components.empty()) throw InputError("mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw InputError("mixture weight outside (0, 1]");
    if (c.mean.size() != 2 || c.cov.rows() != 2 || c.cov.cols() != 2)
      throw DimensionError("mixture components must be bivariate");
    FullGaussian check(c.mean, c.cov);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("mixture weights must sum to 1");
}

DensityHandle MixtureSpec::handle() const {
  validate();
  std::vector<double> w;
  std::vector<FullGaussian> g;
  for (const auto& c : components) {
    w.push_back(c.weight);
    g.emplace_back(c.mean, c.cov);
  }
  return mixture_handle(std::move(w), std::move(g));
}

MixtureSpec MixtureSpec::benchmark() {
  MixtureSpec s;
  s.components.push_back({0.7, Vec{{3.0, 0.0}}, Mat::Identity(2, 2)});
  s.components.push_back({0.3, Vec{{-3.0, 0.0}}, Vec{{1.0, 2.0}}.asDiagonal()});
  return s;
}

json to_json(const MixtureSpec& spec) {
  json comps = json::array();
  for (const auto& c : spec.components)
    comps.push_back({{"weight", c.weight}, {"mean", to_json(c.mean)}, {"cov", to_json(c.cov)}});
  return {{"components", comps}};
}

MixtureSpec mixture_from_json(const json& j) {
  if (!j.is_object() || !j.contains("components") || !j.at("components").is_array())
    throw InputError("mixture needs a \"components\" array");
  MixtureSpec s;
  for (const auto& c : j.at("components")) {
    if (!c.contains("weight") || !c.contains("mean") || !c.contains("cov") || !c.at("weight").is_number())
      throw InputError("mixture component needs \"weight\", \"mean\" and \"cov\"");
    s.components.push_back({c.at("weight").get<double>(), vec_from_json(c.at("mean")), mat_from_json(c.at("cov"))});
  }
  s.validate();
  return s;
}

Mat mixture_sample(const MixtureSpec& spec, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample count must be >= 1");
  return spec.handle().sampler(n, seed);
}

Mat FitParams::cholesky() const {
  Mat l = Mat::Zero(2, 2);
  l(0, 0) = std::exp(chol_lower[0]);
  l(1, 0) = chol_lower[1];
  l(1, 1) = std::exp(chol_lower[2]);
  return l;
}

FullGaussian FitParams::gaussian() const {
  const Mat l = cholesky();
  Mat sigma = l * l.transpose();
  sigma(0, 1) = sigma(1, 0);
  return FullGaussian(mu, sigma);
}

std::array<double, FitParams::kSize> FitParams::to_array() const {
  return {mu(0), mu(1), chol_lower[0], chol_lower[1], chol_lower[2]};
}

FitParams FitParams::from_array(const std::array<double, kSize>& theta) {
  FitParams p;
  p.mu = Vec{{theta[0], theta[1]}};
  p.chol_lower = {theta[2], theta[3], theta[4]};
  return p;
}

FitParams FitParams::from_gaussian(const FullGaussian& g) {
  if (g.dim() != 2) throw DimensionError("FitParams needs a bivariate Gaussian");
  const Mat& l = g.chol_lower();
  FitParams p;
  p.mu = g.mu();
  p.chol_lower = {std::log(l(0, 0)), l(1, 0), std::log(l(1, 1))};
  return p;
}

Vec scott_bandwidth(const Mat& samples) {
  const auto n = static_cast<double>(samples.rows());
  const auto d = static_cast<double>(samples.cols());
  if (samples.rows() < 2) throw InputError("bandwidth needs at least 2 samples");
  const Vec mean = samples.colwise().mean().transpose();
  const Vec var = (samples.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() / (n - 1.0);
  return var.cwiseSqrt() * std::pow(n, -1.0 / (d + 4.0));
}

EmpiricalObjective::EmpiricalObjective(Mat samples, DivergenceSpec spec, std::int64_t n_model_samples,
                                       std::uint64_t seed, std::optional<MixtureSpec> true_density)
    : samples_(std::move(samples)), spec_(spec) {
  spec_.validate();
  if (samples_.cols() != 2) throw DimensionError("the 2-D fitter needs bivariate samples");
  switch (spec_.family) {
    case Family::KLForward:
    case Family::KLReverse:
    case Family::JS:
    case Family::Lambda:
    case Family::GJS: break;
    default:
      throw UnsupportedError(std::string("sample-based fitting does not support ") + to_string(spec_.family));
  }
  if (n_model_samples < 1) throw InputError("need at least one model sample");
  eps_ = standard_normal(n_model_samples, 2, derive_seed(seed, 11));
  bandwidth_ = scott_bandwidth(samples_);
  if (true_density) true_density_ = true_density->handle();
  data_lp_ = data_log_density(samples_);
}

std::vector<double> EmpiricalObjective::data_log_density(const Mat& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  if (true_density_)
    true_density_->evaluate(x, out);
  else
    kernels::kde_log_density(samples_, bandwidth_, x, out);
  return out;
}

double EmpiricalObjective::operator()(const FullGaussian& g) const {
  if (g.dim() != 2) throw DimensionError("model must be bivariate");
  const std::size_t nd = data_lp_.size();
  const Family family = spec_.family;
  const bool need_data_terms = family != Family::KLReverse;
  const bool need_model_terms = family != Family::KLForward;

  std::vector<double> lq_data;
  if (need_data_terms) lq_data = gaussian_rows(g, samples_);

  std::vector<double> lp_model, lq_model;
  if (need_model_terms) {
    const Mat z = (eps_ * g.chol_lower().transpose()).rowwise() + g.mu().transpose();
    lp_model = data_log_density(z);
    lq_model = gaussian_rows(g, z);
  }
  const std::size_t nm = lq_model.size();

  double value = 0.0;
  switch (family) {
    case Family::KLForward: {
      std::vector<double> f(nd);
      for (std::size_t i = 0; i < nd; ++i) f[i] = data_lp_[i] - lq_data[i];
      value = mean_of(f);
      break;
    }
    case Family::KLReverse: {
      std::vector<double> f(nm);
      for (std::size_t i = 0; i < nm; ++i) f[i] = lq_model[i] - lp_model[i];
      value = mean_of(f);
      break;
    }
    case Family::JS:
    case Family::Lambda: {
      const double lam = family == Family::JS ? 0.5 : spec_.lambda_skew;
      const double lw_p = lam < 1.0 ? std::log(1.0 - lam) : -std::numeric_limits<double>::infinity();
      const double lw_q = lam > 0.0 ? std::log(lam) : -std::numeric_limits<double>::infinity();
      std::vector<double> fd(nd), fm(nm);
      for (std::size_t i = 0; i < nd; ++i)
        fd[i] = data_lp_[i] - log_add_exp(lw_p + data_lp_[i], lw_q + lq_data[i]);
      for (std::size_t i = 0; i < nm; ++i)
        fm[i] = lq_model[i] - log_add_exp(lw_p + lp_model[i], lw_q + lq_model[i]);
      value = (lam > 0.0 ? lam * mean_of(fd) : 0.0) + (lam < 1.0 ? (1.0 - lam) * mean_of(fm) : 0.0);
      break;
    }
    case Family::GJS: {
      // With log m = (1-w) log p + w log q - log Z:
      //   KL(p || m) = w E_p[log p - log q] + log Z
      //   KL(q || m) = (1-w) E_q[log q - log p] + log Z
      // and log Z = log E_q[(p/q)^(1-w)].
      const double a = spec_.alpha;
      const double w = intermediate_skew(a, spec_.convention);
      std::vector<double> fd(nd), fm(nm), lz(nm);
      for (std::size_t i = 0; i < nd; ++i) fd[i] = data_lp_[i] - lq_data[i];
      for (std::size_t i = 0; i < nm; ++i) {
        fm[i] = lq_model[i] - lp_model[i];
        lz[i] = (1.0 - w) * (lp_model[i] - lq_model[i]);
      }
      value = (1.0 - a) * w * mean_of(fd) + a * (1.0 - w) * mean_of(fm) + log_mean_exp(lz);
      break;
    }
    default: break;
  }
  if (!std::isfinite(value)) throw NumericalError("empirical divergence is not finite");
  return value;
}

double empirical_divergence(const Mat& samples, const FullGaussian& g, const DivergenceSpec& spec,
                            std::int64_t n_model_samples, std::uint64_t seed) {
  return EmpiricalObjective(samples, spec, n_model_samples, seed)(g);
}

std::array<double, FitParams::kSize> fd_gradient(const EmpiricalObjective& objective, const FitParams& params,
                                                 double step) {
  const auto theta = params.to_array();
  std::array<double, FitParams::kSize> grad{};
  for (int i = 0; i < FitParams::kSize; ++i) {
    const double h = step * std::max(std::abs(theta[i]), 1.0);
    auto plus = theta;
    auto minus = theta;
    plus[i] += h;
    minus[i] -= h;
    grad[i] = (objective(FitParams::from_array(plus)) - objective(FitParams::from_array(minus))) / (2.0 * h);
  }
  return grad;
}

FitTrace fit(const Mat& samples, const DivergenceSpec& spec, const FitOptions& opt,
             const std::optional<MixtureSpec>& true_density) {
  if (samples.rows() < 100) throw InputError("fitting needs at least 100 samples");
  if (!(opt.lr > 0.0) || opt.iters < 1) throw InputError("fit needs lr > 0 and iters >= 1");
  const EmpiricalObjective objective(samples, spec, opt.n_model_samples, opt.seed,
                                     opt.use_true_density ? true_density : std::nullopt);
  if (opt.use_true_density && !true_density) throw InputError("true density requested but not provided");

  FitTrace trace;
  trace.spec = spec;
  trace.seed = opt.seed;
  FitParams params;
  params.mu = samples.colwise().mean().transpose();
  for (int it = 0; it <= opt.iters; ++it) {
    double loss = 0.0;
    try {
      loss = objective(params);
    } catch (const NumericalError& e) {
      trace.aborted = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    trace.iterations.push_back({loss, params});
    trace.final_params = params;
    if (it == opt.iters) break;
    std::array<double, FitParams::kSize> grad{};
    try {
      grad = fd_gradient(objective, params, opt.fd_step);
    } catch (const NumericalError& e) {
      trace.aborted = "gradient at iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    auto theta = params.to_array();
    for (int i = 0; i < FitParams::kSize; ++i) theta[i] -= opt.lr * grad[i];
    params = FitParams::from_array(theta);
  }
  return trace;
}

json to_json(const FitTrace& trace) {
  auto params_json = [](const FitParams& p) {
    return json{{"mu", to_json(p.mu)},
                {"chol_lower", json::array({p.chol_lower[0], p.chol_lower[1], p.chol_lower[2]})},
                {"sigma", to_json(p.gaussian().sigma())}};
  };
  json iters = json::array();
  for (const auto& it : trace.iterations) iters.push_back({{"loss", it.loss}, {"params", params_json(it.params)}});
  json j = {{"spec", to_json(trace.spec)},
            {"seed", trace.seed},
            {"iterations", iters},
            {"final", params_json(trace.final_params)}};
  if (trace.aborted) j["aborted"] = *trace.aborted;
  return j;
}

FitTrace fit_trace_from_json(const json& j) {
  auto params_from = [](const json& p) {
    FitParams r;
    r.mu = vec_from_json(p.at("mu"));
    const Vec c = vec_from_json(p.at("chol_lower"));
    if (r.mu.size() != 2 || c.size() != 3) throw DimensionError("malformed fit parameters");
    r.chol_lower = {c(0), c(1), c(2)};
    return r;
  };
  try {
    FitTrace t;
    t.spec = divergence_spec_from_json(j.at("spec"));
    t.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& it : j.at("iterations")) t.iterations.push_back({it.at("loss").get<double>(), params_from(it.at("params"))});
    t.final_params = params_from(j.at("final"));
    if (j.contains("aborted")) t.aborted = j.at("aborted").get<std::string>();
    return t;
  } catch (const json::exception& e) {
    throw InputError(std::string("fit trace: ") + e.what());
  }
}

LevelSetTable level_set_dump(const FullGaussian& g, const Grid2d& grid) {
  if (g.dim() != 2) throw DimensionError("level sets need a bivariate Gaussian");
  if (grid.nx < 2 || grid.ny < 2 || !(grid.x_hi > grid.x_lo) || !(grid.y_hi > grid.y_lo))
    throw InputError("grid needs at least 2 nodes per axis and increasing bounds");
  Mat pts(static_cast<Eigen::Index>(grid.nx) * grid.ny, 2);
  const double hx = (grid.x_hi - grid.x_lo) / (grid.nx - 1);
  const double hy = (grid.y_hi - grid.y_lo) / (grid.ny - 1);
  Eigen::Index r = 0;
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j, ++r) {
      pts(r, 0) = i + 1 == grid.nx ? grid.x_hi : grid.x_lo + i * hx;
      pts(r, 1) = j + 1 == grid.ny ? grid.y_hi : grid.y_lo + j * hy;
    }
  const auto lp = gaussian_rows(g, pts);
  LevelSetTable t;
  t.x.assign(pts.col(0).data(), pts.col(0).data() + pts.rows());
  t.y.assign(pts.col(1).data(), pts.col(1).data() + pts.rows());
  t.density.resize(lp.size());
  for (std::size_t k = 0; k < lp.size(); ++k) t.density[k] = std::exp(lp[k]);
  return t;
}

void write_level_set_csv(const LevelSetTable& table, const std::string& path) {
  write_numeric_csv(path, {"x", "y", "density"}, {table.x, table.y, table.density});
}

}  // namespace gjs
