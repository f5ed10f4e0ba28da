#include "gjs/vae.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "gjs/diag_terms.hpp"
#include "gjs/dual.hpp"
#include "gjs/error.hpp"
#include "gjs/kernels.hpp"
#include "gjs/rng.hpp"

namespace gjs {

namespace {

// Per-dimension regularizer term, templated for Dual gradients.
template <class T>
T diag_term(const T& mu, const T& log_var, const DivergenceSpec& spec) {
  switch (spec.family) {
    case Family::KLReverse: return diag::kl_reverse(mu, log_var);
    case Family::KLForward: return diag::kl_forward(mu, log_var);
    case Family::GJS: return diag::gjs(mu, log_var, spec.alpha, spec.convention);
    case Family::GJSDual: return diag::gjs_dual(mu, log_var, spec.alpha, spec.convention);
    default: break;
  }
  throw UnsupportedError(std::string("no per-dimension regularizer for ") + to_string(spec.family));
}

void check_loss_family(const DivergenceSpec& spec) {
  switch (spec.family) {
    case Family::KLForward:
    case Family::KLReverse:
    case Family::GJS:
    case Family::GJSDual:
    case Family::MMD: return;
    default: break;
  }
  throw UnsupportedError(std::string("the VAE loss does not support ") + to_string(spec.family));
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Mat sigmoid(const Mat& z) { return apply(Activation::Sigmoid, z); }

Mat gather_rows(const Mat& x, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
  Mat out(static_cast<Eigen::Index>(end - begin), x.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = x.row(idx[i]);
  return out;
}

double log_mean_exp(const double* v, Eigen::Index n) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s / static_cast<double>(n));
}

}  // namespace

const char* to_string(DecoderOutput out) { return out == DecoderOutput::MSE ? "mse" : "bernoulli"; }

DecoderOutput parse_decoder_output(const std::string& name) {
  if (name == "mse") return DecoderOutput::MSE;
  if (name == "bernoulli") return DecoderOutput::Bernoulli;
  throw InputError("unknown decoder output '" + name + "' (expected mse or bernoulli)");
}

void VaeArch::validate() const {
  if (input_dim < 1 || latent_dim < 1) throw InputError("input and latent dimensions must be positive");
  if (latent_dim > input_dim) throw InputError("latent dimension must not exceed the input dimension");
  if (hidden_dims.empty()) throw InputError("the VAE needs at least one hidden layer");
  for (auto h : hidden_dims)
    if (h < 1) throw InputError("hidden widths must be positive");
}

json to_json(const VaeArch& arch) {
  return {{"input_dim", arch.input_dim},
          {"hidden_dims", arch.hidden_dims},
          {"latent_dim", arch.latent_dim},
          {"decoder_output", to_string(arch.decoder_output)},
          {"hidden_activation", to_string(arch.hidden_activation)}};
}

VaeArch vae_arch_from_json(const json& j) {
  try {
    VaeArch a;
    a.input_dim = j.at("input_dim").get<Eigen::Index>();
    a.hidden_dims = j.at("hidden_dims").get<std::vector<Eigen::Index>>();
    a.latent_dim = j.at("latent_dim").get<Eigen::Index>();
    a.decoder_output = parse_decoder_output(j.value("decoder_output", std::string("mse")));
    a.hidden_activation = parse_activation(j.value("hidden_activation", std::string("relu")));
    a.validate();
    return a;
  } catch (const json::exception& e) {
    throw InputError(std::string("VAE architecture: ") + e.what());
  }
}

VaeModel::VaeModel(const VaeArch& arch) : arch_(arch) {
  arch_.validate();
  std::vector<Eigen::Index> enc{arch_.input_dim};
  enc.insert(enc.end(), arch_.hidden_dims.begin(), arch_.hidden_dims.end());
  encoder_ = DenseStack(enc, arch_.hidden_activation, arch_.hidden_activation, 0);
  Eigen::Index off = encoder_.end_offset();
  mu_head_ = {arch_.hidden_dims.back(), arch_.latent_dim, off};
  off += mu_head_.size();
  log_var_head_ = {arch_.hidden_dims.back(), arch_.latent_dim, off};
  off += log_var_head_.size();
  std::vector<Eigen::Index> dec{arch_.latent_dim};
  dec.insert(dec.end(), arch_.hidden_dims.rbegin(), arch_.hidden_dims.rend());
  dec.push_back(arch_.input_dim);
  decoder_ = DenseStack(dec, arch_.hidden_activation, Activation::Identity, off);
  params_ = Vec::Zero(decoder_.end_offset());
}

VaeModel VaeModel::init(const VaeArch& arch, std::uint64_t seed) {
  VaeModel m(arch);
  Rng rng = make_rng(seed);
  std::vector<Linear> all = m.encoder_.layers();
  all.push_back(m.mu_head_);
  all.push_back(m.log_var_head_);
  for (const auto& l : m.decoder_.layers()) all.push_back(l);
  for (const auto& l : all) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index k = 0; k < l.in * l.out; ++k) m.params_(l.offset + k) = u(rng);
  }
  return m;
}

json VaeModel::to_json() const {
  return {{"arch", gjs::to_json(arch_)}, {"params", gjs::to_json(params_)}};
}

VaeModel VaeModel::from_json(const json& j) {
  if (!j.is_object() || !j.contains("arch") || !j.contains("params"))
    throw InputError("model JSON needs \"arch\" and \"params\"");
  VaeModel m(vae_arch_from_json(j.at("arch")));
  const Vec p = vec_from_json(j.at("params"));
  if (p.size() != m.params_.size()) throw DimensionError("model parameter count does not match its architecture");
  if (!p.allFinite()) throw InputError("model parameters must be finite");
  m.params_ = p;
  return m;
}

DiagonalGaussian PosteriorBatch::row(Eigen::Index i) const {
  return DiagonalGaussian(mu.row(i).transpose(), log_var.row(i).transpose());
}

PosteriorBatch encode(const VaeModel& model, const Mat& x) {
  if (x.cols() != model.arch().input_dim) throw DimensionError("input width does not match the model");
  const Vec& p = model.params();
  const Mat h = model.encoder().forward(p, x);
  PosteriorBatch post;
  post.mu.noalias() = h * weight(p, model.mu_head()).transpose();
  post.mu.rowwise() += bias(p, model.mu_head()).transpose();
  post.log_var.noalias() = h * weight(p, model.log_var_head()).transpose();
  post.log_var.rowwise() += bias(p, model.log_var_head()).transpose();
  return post;
}

Mat decode(const VaeModel& model, const Mat& z) {
  if (z.cols() != model.arch().latent_dim) throw DimensionError("latent width does not match the model");
  return sigmoid(model.decoder().forward(model.params(), z));
}

Mat reparam_sample(const PosteriorBatch& post, std::uint64_t seed) {
  const Mat eps = standard_normal(post.mu.rows(), post.mu.cols(), seed);
  return (post.mu.array() + (0.5 * post.log_var.array()).exp() * eps.array()).matrix();
}

double diag_divergence(const DiagonalGaussian& g, const DivergenceSpec& spec) {
  switch (spec.family) {
    case Family::KLReverse: return kl_diag_reverse(g);
    case Family::KLForward: return kl_diag_forward(g);
    case Family::GJS: return gjs_diag(g, spec.alpha, spec.convention);
    case Family::GJSDual: return gjs_dual_diag(g, spec.alpha, spec.convention);
    default: break;
  }
  throw UnsupportedError(std::string("no diagonal closed form for ") + to_string(spec.family));
}

LossTerms loss(const VaeModel& model, const Mat& x, const DivergenceSpec& reg, std::uint64_t seed, LatentMode mode,
               Vec* grad) {
  reg.validate();
  check_loss_family(reg);
  if (x.cols() != model.arch().input_dim) throw DimensionError("input width does not match the model");
  if (x.rows() < 1) throw InputError("empty batch");
  const Vec& p = model.params();
  const Eigen::Index b = x.rows();
  const Eigen::Index n = model.arch().latent_dim;
  const double inv_b = 1.0 / static_cast<double>(b);

  DenseStack::Cache enc_cache, dec_cache;
  const Mat h = model.encoder().forward(p, x, grad ? &enc_cache : nullptr);
  Mat mu = h * weight(p, model.mu_head()).transpose();
  mu.rowwise() += bias(p, model.mu_head()).transpose();
  Mat lv = h * weight(p, model.log_var_head()).transpose();
  lv.rowwise() += bias(p, model.log_var_head()).transpose();

  const bool sampled = mode == LatentMode::SampleLatent;
  Mat eps, sd;
  Mat z = mu;
  if (sampled) {
    eps = standard_normal(b, n, seed);
    sd = (0.5 * lv.array()).exp().matrix();
    z.array() += sd.array() * eps.array();
  }

  const Mat logits = model.decoder().forward(p, z, grad ? &dec_cache : nullptr);
  const Mat xhat = sigmoid(logits);

  LossTerms out;
  std::vector<double> per_example(static_cast<std::size_t>(b));
  const bool mse = model.arch().decoder_output == DecoderOutput::MSE;
  for (Eigen::Index i = 0; i < b; ++i) {
    double s = 0.0;
    if (mse) {
      s = (xhat.row(i) - x.row(i)).squaredNorm();
    } else {
      for (Eigen::Index k = 0; k < x.cols(); ++k) s += softplus(logits(i, k)) - x(i, k) * logits(i, k);
    }
    per_example[static_cast<std::size_t>(i)] = s;
  }
  out.recon = kernels::pairwise_sum(per_example) * inv_b;

  Mat dmu, dlv, dz_reg;
  if (grad) {
    dmu = Mat::Zero(b, n);
    dlv = Mat::Zero(b, n);
  }
  Mat prior;
  if (reg.family == Family::MMD) {
    if (b < 2) throw InputError("the MMD regularizer needs a batch of at least 2");
    prior = standard_normal(b, n, derive_seed(seed, 1));
    out.div = mmd(z, prior, reg.mmd_bandwidth);
    if (grad) {
      // d/dz_i of the unbiased estimate; only the z-z and z-prior terms depend on z.
      const double h2 = reg.mmd_bandwidth * reg.mmd_bandwidth;
      const double bb = static_cast<double>(b);
      const double c_zz = 2.0 / (bb * (bb - 1.0));
      const double c_zy = -2.0 / (bb * bb);
      dz_reg = Mat::Zero(b, n);
      for (Eigen::Index i = 0; i < b; ++i) {
        for (Eigen::Index j = 0; j < b; ++j) {
          if (j != i) {
            const Vec d = (z.row(i) - z.row(j)).transpose();
            const double k = std::exp(-d.squaredNorm() / (2.0 * h2));
            dz_reg.row(i) -= c_zz * k / h2 * d.transpose();
          }
          const Vec e = (z.row(i) - prior.row(j)).transpose();
          const double k = std::exp(-e.squaredNorm() / (2.0 * h2));
          dz_reg.row(i) -= c_zy * k / h2 * e.transpose();
        }
      }
      dz_reg *= reg.weight;
    }
  } else {
    std::vector<double> div(static_cast<std::size_t>(b));
    for (Eigen::Index i = 0; i < b; ++i) {
      double s = 0.0;
      for (Eigen::Index d = 0; d < n; ++d) {
        if (grad) {
          using D = Dual<2>;
          const D t = diag_term(D::variable(mu(i, d), 0), D::variable(lv(i, d), 1), reg);
          s += t.v;
          dmu(i, d) += reg.weight * inv_b * t.d[0];
          dlv(i, d) += reg.weight * inv_b * t.d[1];
        } else {
          s += diag_term(mu(i, d), lv(i, d), reg);
        }
      }
      div[static_cast<std::size_t>(i)] = s;
    }
    out.div = kernels::pairwise_sum(div) * inv_b;
  }
  out.total = out.recon + reg.weight * out.div;
  if (!grad) return out;

  grad->setZero(p.size());
  Mat dlogits = mse ? (2.0 * inv_b * (xhat - x).array() * xhat.array() * (1.0 - xhat.array())).matrix()
                    : (inv_b * (xhat - x)).eval();
  Mat dz = model.decoder().backward(p, dec_cache, std::move(dlogits), *grad, true);
  if (dz_reg.size()) dz += dz_reg;
  dmu += dz;
  if (sampled) dlv.array() += dz.array() * eps.array() * 0.5 * sd.array();

  auto head_backward = [&](const Linear& l, const Mat& d) {
    Eigen::Map<Mat> gw(grad->data() + l.offset, l.out, l.in);
    Eigen::Map<Vec> gb(grad->data() + l.offset + l.in * l.out, l.out);
    gw.noalias() += d.transpose() * h;
    gb += d.colwise().sum().transpose();
  };
  head_backward(model.mu_head(), dmu);
  head_backward(model.log_var_head(), dlv);
  Mat dh = dmu * weight(p, model.mu_head());
  dh.noalias() += dlv * weight(p, model.log_var_head());
  model.encoder().backward(p, enc_cache, std::move(dh), *grad, false);
  return out;
}

double grad_check(const VaeModel& model, const Mat& x, const DivergenceSpec& reg, std::uint64_t seed, double eps,
                  int n_params) {
  Vec analytic;
  loss(model, x, reg, seed, LatentMode::SampleLatent, &analytic);
  VaeModel probe = model;
  Rng rng = make_rng(derive_seed(seed, 5));
  std::uniform_int_distribution<Eigen::Index> pick(0, model.param_count() - 1);
  double worst = 0.0;
  for (int t = 0; t < n_params; ++t) {
    const Eigen::Index i = pick(rng);
    const double keep = probe.params()(i);
    probe.params()(i) = keep + eps;
    const double up = loss(probe, x, reg, seed).total;
    probe.params()(i) = keep - eps;
    const double down = loss(probe, x, reg, seed).total;
    probe.params()(i) = keep;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

void TrainConfig::validate() const {
  reg.validate();
  check_loss_family(reg);
  if (batch_size < 1) throw InputError("batch size must be >= 1");
  if (epochs < 0) throw InputError("epochs must be >= 0");
  if (!(lr > 0.0)) throw InputError("learning rate must be > 0");
}

json to_json(const TrainConfig& cfg) {
  return {{"reg", to_json(cfg.reg)},
          {"batch_size", cfg.batch_size},
          {"epochs", cfg.epochs},
          {"lr", cfg.lr},
          {"seed", cfg.seed},
          {"dataset_path", cfg.dataset_path},
          {"eval_mode", cfg.eval_mode == LatentMode::MeanLatent ? "mean" : "sample"}};
}

TrainConfig train_config_from_json(const json& j) {
  try {
    TrainConfig c;
    c.reg = divergence_spec_from_json(j.at("reg"));
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.seed = j.value("seed", c.seed);
    c.dataset_path = j.value("dataset_path", c.dataset_path);
    const std::string mode = j.value("eval_mode", std::string("mean"));
    if (mode != "mean" && mode != "sample") throw InputError("eval_mode must be mean or sample");
    c.eval_mode = mode == "mean" ? LatentMode::MeanLatent : LatentMode::SampleLatent;
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("train config: ") + e.what());
  }
}

std::string TrainRecord::deterministic_digest() const {
  std::ostringstream os;
  os << config_hash << ' ' << seed << '\n';
  for (const auto& e : epochs)
    os << e.epoch << ' ' << format_double(e.train_recon) << ' ' << format_double(e.train_div) << ' '
       << format_double(e.test_recon) << ' ' << format_double(e.test_div) << '\n';
  if (aborted) os << "aborted " << *aborted << '\n';
  return os.str();
}

std::string to_jsonl(const TrainRecord& record) {
  std::ostringstream os;
  for (const auto& e : record.epochs) {
    const json line = {{"epoch", e.epoch},           {"train_recon", e.train_recon}, {"train_div", e.train_div},
                       {"test_recon", e.test_recon}, {"test_div", e.test_div},       {"wall_time_s", e.wall_time_s},
                       {"config_hash", record.config_hash}, {"seed", record.seed}};
    os << line.dump() << '\n';
  }
  if (record.aborted)
    os << json{{"aborted", *record.aborted}, {"config_hash", record.config_hash}, {"seed", record.seed}}.dump()
       << '\n';
  return os.str();
}

TrainRecord train_record_from_jsonl(const std::string& text) {
  TrainRecord r;
  std::istringstream is(text);
  std::string line;
  try {
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      r.config_hash = j.at("config_hash").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("aborted")) {
        r.aborted = j.at("aborted").get<std::string>();
        continue;
      }
      EpochRecord e;
      e.epoch = j.at("epoch").get<int>();
      e.train_recon = j.at("train_recon").get<double>();
      e.train_div = j.at("train_div").get<double>();
      e.test_recon = j.at("test_recon").get<double>();
      e.test_div = j.at("test_div").get<double>();
      e.wall_time_s = j.at("wall_time_s").get<double>();
      r.epochs.push_back(e);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("train record: ") + e.what());
  }
  return r;
}

LossTerms evaluate(const VaeModel& model, const Mat& x, const DivergenceSpec& reg, LatentMode mode,
                   std::uint64_t seed) {
  constexpr Eigen::Index kChunk = 512;
  LossTerms acc;
  if (x.rows() == 0) return acc;
  std::uint64_t chunk = 0;
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk, ++chunk) {
    const Eigen::Index rows = std::min(kChunk, x.rows() - start);
    const LossTerms t = loss(model, x.middleRows(start, rows), reg, derive_seed(seed, chunk), mode);
    const double w = static_cast<double>(rows) / static_cast<double>(x.rows());
    acc.recon += w * t.recon;
    acc.div += w * t.div;
  }
  acc.total = acc.recon + reg.weight * acc.div;
  return acc;
}

TrainRecord train(VaeModel& model, const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg,
                  const std::string& arch_tag) {
  cfg.validate();
  if (train_data.size() < 1) throw InputError("empty training set");
  if (train_data.dim() != model.arch().input_dim) throw DimensionError("dataset width does not match the model");
  if (test_data.size() > 0 && test_data.dim() != model.arch().input_dim)
    throw DimensionError("test set width does not match the model");
  if (train_data.x.minCoeff() < 0.0 || train_data.x.maxCoeff() > 1.0)
    throw InputError("training data must lie in [0, 1]");

  TrainRecord record;
  record.seed = cfg.seed;
  json hashed = to_json(cfg);
  hashed["arch"] = to_json(model.arch());
  if (!arch_tag.empty()) hashed["tag"] = arch_tag;
  record.config_hash = config_hash(hashed);

  const auto t0 = std::chrono::steady_clock::now();
  auto eval_epoch = [&](int epoch) {
    EpochRecord e;
    e.epoch = epoch;
    const std::uint64_t s = derive_seed(cfg.seed, 0x7E57000000ULL + static_cast<std::uint64_t>(epoch));
    const LossTerms tr = evaluate(model, train_data.x, cfg.reg, cfg.eval_mode, s);
    e.train_recon = tr.recon;
    e.train_div = tr.div;
    if (test_data.size() > 0) {
      const LossTerms te = evaluate(model, test_data.x, cfg.reg, cfg.eval_mode, derive_seed(s, 1));
      e.test_recon = te.recon;
      e.test_div = te.div;
    }
    e.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return e;
  };
  record.epochs.push_back(eval_epoch(0));

  const Eigen::Index np = model.param_count();
  Vec m = Vec::Zero(np), v = Vec::Zero(np), g(np);
  constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::uint64_t step = 0;
  const auto n = order.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, 0x5EED000000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += bs, ++step) {
      const Mat xb = gather_rows(train_data.x, order, start, std::min(n, start + bs));
      const LossTerms t = loss(model, xb, cfg.reg, derive_seed(cfg.seed, step), LatentMode::SampleLatent, &g);
      if (!std::isfinite(t.total) || !g.allFinite()) {
        record.aborted = "non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step);
        return record;
      }
      b1t *= b1;
      b2t *= b2;
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      model.params().array() -=
          cfg.lr * (m.array() / (1.0 - b1t)) / ((v.array() / (1.0 - b2t)).sqrt() + adam_eps);
    }
    record.epochs.push_back(eval_epoch(epoch));
    const auto& last = record.epochs.back();
    if (!std::isfinite(last.train_recon) || !std::isfinite(last.train_div)) {
      record.aborted = "non-finite evaluation at epoch " + std::to_string(epoch);
      return record;
    }
  }
  return record;
}

EvidenceEstimate estimate_log_evidence(const VaeModel& model, const Mat& x, int k, std::uint64_t seed,
                                       bool bootstrap, int n_resamples) {
  if (k < 1) throw InputError("evidence estimate needs k >= 1 prior samples");
  if (x.cols() != model.arch().input_dim) throw DimensionError("input width does not match the model");
  if (x.rows() < 1) throw InputError("empty batch");
  const Mat z = standard_normal(k, model.arch().latent_dim, seed);
  const Mat logits = model.decoder().forward(model.params(), z);
  const auto d = static_cast<double>(x.cols());
  Mat ll(x.rows(), k);  // log p(x_i | z_j)
  if (model.arch().decoder_output == DecoderOutput::MSE) {
    const Mat xhat = sigmoid(logits);
    ll.noalias() = x * xhat.transpose();
    const Vec xn = x.rowwise().squaredNorm();
    const Vec hn = xhat.rowwise().squaredNorm();
    const double c = -0.5 * d * std::log(2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < k; ++j) ll(i, j) = c - 0.5 * (xn(i) - 2.0 * ll(i, j) + hn(j));
  } else {
    ll.noalias() = x * logits.transpose();
    Vec sp(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < logits.cols(); ++c) s += softplus(logits(j, c));
      sp(j) = s;
    }
    ll.rowwise() -= sp.transpose();
  }
  EvidenceEstimate est;
  est.per_example.resize(static_cast<std::size_t>(x.rows()));
  const Mat llr = ll.transpose();  // column i holds example i contiguously
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    est.per_example[static_cast<std::size_t>(i)] = log_mean_exp(llr.col(i).data(), k);
  est.mean = kernels::pairwise_sum(est.per_example) / static_cast<double>(x.rows());
  if (bootstrap) {
    if (n_resamples < 1) throw InputError("bootstrap needs at least one resample");
    Rng rng = make_rng(derive_seed(seed, 99));
    std::uniform_int_distribution<std::size_t> pick(0, est.per_example.size() - 1);
    std::vector<double> means(static_cast<std::size_t>(n_resamples));
    std::vector<double> draw(est.per_example.size());
    for (auto& mean : means) {
      for (auto& v : draw) v = est.per_example[pick(rng)];
      mean = kernels::pairwise_sum(draw) / static_cast<double>(draw.size());
    }
    std::sort(means.begin(), means.end());
    const auto r = static_cast<double>(n_resamples);
    const auto lo = static_cast<std::size_t>(std::floor(0.025 * r));
    const auto hi = std::min(means.size() - 1, static_cast<std::size_t>(std::ceil(0.975 * r)) - 1);
    est.ci95 = std::make_pair(means[lo], means[hi]);
  }
  return est;
}

TraversalGrid latent_traversal(const VaeModel& model, const Vec& x, const std::vector<Eigen::Index>& dims,
                               Eigen::Index n_points, double lo, double hi) {
  if (n_points < 1) throw InputError("traversal needs at least one point");
  if (dims.empty()) throw InputError("traversal needs at least one latent dimension");
  const Eigen::Index n = model.arch().latent_dim;
  for (auto d : dims)
    if (d < 0 || d >= n) throw InputError("latent dimension " + std::to_string(d) + " out of range");
  const PosteriorBatch post = encode(model, x.transpose());
  const auto nd = static_cast<Eigen::Index>(dims.size());
  Mat z(nd * n_points, n);
  for (Eigen::Index a = 0; a < nd; ++a)
    for (Eigen::Index p = 0; p < n_points; ++p) {
      const double t = n_points == 1 ? lo : lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(n_points - 1);
      z.row(a * n_points + p) = post.mu.row(0);
      z(a * n_points + p, dims[static_cast<std::size_t>(a)]) = t;
    }
  const Mat img = decode(model, z);
  TraversalGrid g;
  g.n_dims = nd;
  g.n_points = n_points;
  g.input_dim = img.cols();
  g.values.resize(static_cast<std::size_t>(img.size()));
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) g.values[static_cast<std::size_t>(r * img.cols() + c)] = img(r, c);
  return g;
}

void write_traversal_png(const TraversalGrid& grid, const std::string& path) {
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(grid.input_dim))));
  if (side * side != grid.input_dim) throw InputError("PNG traversal needs square images; use the CSV output");
  const auto w = static_cast<int>(grid.n_points * side);
  const auto h = static_cast<int>(grid.n_dims * side);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (Eigen::Index d = 0; d < grid.n_dims; ++d)
    for (Eigen::Index p = 0; p < grid.n_points; ++p)
      for (Eigen::Index k = 0; k < grid.input_dim; ++k) {
        const Eigen::Index y = d * side + k / side;
        const Eigen::Index xx = p * side + k % side;
        const double v = std::clamp(grid.at(d, p, k), 0.0, 1.0);
        px[static_cast<std::size_t>(y * w + xx)] = static_cast<std::uint8_t>(std::lround(255.0 * v));
      }
  write_png_gray(path, w, h, px);
}

void write_traversal_csv(const TraversalGrid& grid, const std::string& path) {
  CsvTable t;
  t.header = {"dim_index", "point"};
  for (Eigen::Index k = 0; k < grid.input_dim; ++k) t.header.push_back("p" + std::to_string(k));
  for (Eigen::Index d = 0; d < grid.n_dims; ++d)
    for (Eigen::Index p = 0; p < grid.n_points; ++p) {
      std::vector<std::string> row{std::to_string(d), std::to_string(p)};
      for (Eigen::Index k = 0; k < grid.input_dim; ++k) row.push_back(format_double(grid.at(d, p, k)));
      t.rows.push_back(std::move(row));
    }
  write_csv(path, t);
}

}  // namespace gjs
