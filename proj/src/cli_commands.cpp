#include "gjs/cli_commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "gjs/error.hpp"
#include "gjs/fit2d.hpp"
#include "gjs/oracle.hpp"
#include "gjs/rng.hpp"

namespace gjs {

namespace fs = std::filesystem;

namespace {

constexpr int kEvidenceSamples = 128;

bool has_skew(Family f) { return f == Family::GJS || f == Family::GJSDual; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw InputError("not a number: '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InputError("not a number: '" + s + "'");
  }
}

template <class T, class F>
std::vector<T> parse_list(const std::string& s, F&& parse_one) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(parse_one(item));
  if (out.empty()) throw InputError("empty list '" + s + "'");
  return out;
}

std::vector<Eigen::Index> parse_index_list(const std::string& s) {
  return parse_list<Eigen::Index>(s, [](const std::string& v) {
    const double d = parse_number(v);
    if (d < 0 || d != std::floor(d)) throw InputError("expected a non-negative integer, got '" + v + "'");
    return static_cast<Eigen::Index>(d);
  });
}

// Divergence flags shared by div, fit, train and sweep.
struct SpecFlags {
  std::string family = "gjs";
  double alpha = 0.5;
  std::string conv = "primed";
  bool dual = false;
  double lambda_skew = 0.5;
  double weight = 1.0;
  double mmd_bandwidth = 1.0;

  void add(CLI::App* cmd, bool with_weight) {
    cmd->add_option("--family", family, "kl-forward, kl-reverse, js, lambda, gjs, gjs-dual or mmd");
    cmd->add_option("--alpha", alpha, "skew of gjs / gjs-dual");
    cmd->add_option("--conv", conv, "original or primed");
    cmd->add_flag("--dual", dual, "use the dual of gjs");
    cmd->add_option("--lambda", lambda_skew, "mixture weight of the lambda family");
    if (with_weight) {
      cmd->add_option("--weight", weight, "multiplier on the divergence term");
      cmd->add_option("--mmd-bandwidth", mmd_bandwidth, "Gaussian kernel width for mmd");
    }
  }

  Family resolved_family(const std::string& name) const {
    Family f = parse_family(name);
    if (dual) {
      if (f != Family::GJS && f != Family::GJSDual) throw InputError("--dual only applies to gjs");
      f = Family::GJSDual;
    }
    return f;
  }

  DivergenceSpec spec_for(Family f) const {
    DivergenceSpec s(f, parse_convention(conv));
    s.alpha = alpha;
    s.lambda_skew = lambda_skew;
    s.weight = weight;
    s.mmd_bandwidth = mmd_bandwidth;
    s.validate();
    return s;
  }

  DivergenceSpec spec() const { return spec_for(resolved_family(family)); }
};

struct Manifest {
  std::string command;
  json files = json::array();

  void add(const std::string& path, const std::string& hash) {
    files.push_back({{"path", fs::path(path).filename().string()}, {"config_hash", hash}});
  }
  void write(const std::string& dir) const {
    write_json((fs::path(dir) / "manifest.json").string(), {{"command", command}, {"files", files}});
  }
};

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

Dataset load_named(const std::string& name, std::int64_t limit) {
  Dataset d = load_dataset(resolve_data_path(name));
  return limit > 0 ? head(d, limit) : d;
}

// Flags that build the architecture and the base training config.
struct TrainFlags {
  SpecFlags spec;
  std::string train_path = "mnist-train-images-idx3-ubyte";
  std::string test_path = "mnist-test-images-idx3-ubyte";
  std::int64_t train_limit = -1;
  std::int64_t test_limit = -1;
  int epochs = 20;
  int batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string hidden = "256,256";
  Eigen::Index latent = 10;
  std::string decoder = "mse";
  std::string activation = "relu";
  std::string config;
  std::string out = "out";

  void add(CLI::App* cmd) {
    spec.family = "kl-reverse";
    spec.add(cmd, true);
    cmd->add_option("--train", train_path, "training images (IDX or GJSD)");
    cmd->add_option("--test", test_path, "test images; 'none' to skip");
    cmd->add_option("--train-limit", train_limit, "use only the first n training images");
    cmd->add_option("--test-limit", test_limit, "use only the first n test images");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch", batch);
    cmd->add_option("--lr", lr);
    cmd->add_option("--seed", seed);
    cmd->add_option("--hidden", hidden, "comma separated hidden widths");
    cmd->add_option("--latent", latent);
    cmd->add_option("--decoder", decoder, "mse or bernoulli");
    cmd->add_option("--activation", activation, "hidden activation");
    cmd->add_option("--config", config, "JSON train config; flags are ignored for fields it sets");
    cmd->add_option("--out", out, "output directory");
  }

  VaeArch arch(Eigen::Index input_dim) const {
    VaeArch a;
    a.input_dim = input_dim;
    a.hidden_dims = parse_index_list(hidden);
    a.latent_dim = latent;
    a.decoder_output = parse_decoder_output(decoder);
    a.hidden_activation = parse_activation(activation);
    a.validate();
    return a;
  }

  TrainConfig train_config() const {
    if (!config.empty()) {
      const json j = read_json(config);
      return train_config_from_json(j.contains("base") ? j.at("base") : j);
    }
    TrainConfig c;
    c.reg = spec.spec();
    c.batch_size = batch;
    c.epochs = epochs;
    c.lr = lr;
    c.seed = seed;
    c.dataset_path = train_path;
    c.validate();
    return c;
  }

  std::pair<Dataset, Dataset> data(const std::string& train_name) const {
    Dataset tr = load_named(train_name, train_limit);
    Dataset te = test_path == "none" ? Dataset{} : load_named(test_path, test_limit);
    return {std::move(tr), std::move(te)};
  }
};

void write_run(const std::string& dir, const std::string& stem, const RunResult& r, Manifest& manifest) {
  const std::string jsonl = out_path(dir, stem + ".jsonl");
  write_text(jsonl, to_jsonl(r.record));
  manifest.add(jsonl, r.record.config_hash);
  const std::string model = out_path(dir, stem + ".model.json");
  write_json(model, r.model.to_json());
  manifest.add(model, r.record.config_hash);
}

int cmd_div(const SpecFlags& flags, const std::string& a, const std::string& b, const std::vector<double>& oracle,
            const std::string& json_out, std::ostream& out) {
  const FullGaussian g1 = parse_gaussian_arg(a);
  const FullGaussian g2 = parse_gaussian_arg(b);
  if (g1.dim() != g2.dim()) throw DimensionError("the two Gaussians differ in dimension");
  const DivergenceSpec spec = flags.spec();
  json result = {{"spec", to_json(spec)}};
  double value = 0.0;
  if (spec.family == Family::JS || spec.family == Family::Lambda) {
    if (g1.dim() != 1) throw UnsupportedError("js and lambda have no Gaussian closed form; use a 1-D pair");
    const auto p = gaussian_handle(g1), q = gaussian_handle(g2);
    const auto [lo, hi] = default_bounds_1d(p, q);
    value = quad_divergence_1d(p, q, spec, lo, hi, 1e-12);
    result["quadrature"] = value;
  } else {
    value = closed_form(g1, g2, spec);
    result["closed_form"] = value;
  }
  out << format_double(value);
  if (!oracle.empty()) {
    if (oracle.size() != 2 || oracle[0] < 2 || oracle[1] < 0) throw InputError("--oracle takes n and seed");
    const auto est = mc_divergence(gaussian_handle(g1), gaussian_handle(g2), spec,
                                   static_cast<std::int64_t>(oracle[0]), static_cast<std::uint64_t>(oracle[1]));
    out << ' ' << format_double(est.value) << ' ' << format_double(est.std_error);
    result["mc"] = {{"value", est.value}, {"std_error", est.std_error}, {"n", est.n_samples}, {"seed", est.seed}};
  }
  out << '\n';
  if (!json_out.empty()) write_json(json_out, result);
  return kExitOk;
}

struct FitFlags {
  SpecFlags spec;
  std::string mixture = "benchmark";
  std::int64_t n_samples = 2000;
  FitOptions opt;
  std::string out = "out";
  Grid2d grid;
};

int cmd_fit(const FitFlags& f, std::ostream& out) {
  const MixtureSpec mix = f.mixture == "benchmark" ? MixtureSpec::benchmark() : mixture_from_json(read_json(f.mixture));
  const DivergenceSpec spec = f.spec.spec();
  const Mat samples = mixture_sample(mix, f.n_samples, derive_seed(f.opt.seed, 77));
  const FitTrace trace = fit(samples, spec, f.opt, mix);
  ensure_directory(f.out);
  json cfg = {{"mixture", to_json(mix)}, {"spec", to_json(spec)}, {"n_samples", f.n_samples},
              {"lr", f.opt.lr},          {"iters", f.opt.iters},  {"n_model_samples", f.opt.n_model_samples},
              {"seed", f.opt.seed},      {"fd_step", f.opt.fd_step}, {"use_true_density", f.opt.use_true_density}};
  const std::string hash = config_hash(cfg);
  Manifest manifest{"fit"};
  const std::string trace_path = out_path(f.out, "trace.json");
  write_json(trace_path, to_json(trace));
  manifest.add(trace_path, hash);
  const FullGaussian g = trace.final_params.gaussian();
  const std::string level_path = out_path(f.out, "level_set.csv");
  write_level_set_csv(level_set_dump(g, f.grid), level_path);
  manifest.add(level_path, hash);
  const std::string mix_path = out_path(f.out, "mixture_level_set.csv");
  {
    LevelSetTable t;
    const DensityHandle h = mix.handle();
    for (int i = 0; i < f.grid.nx; ++i)
      for (int j = 0; j < f.grid.ny; ++j) {
        const double x = f.grid.x_lo + (f.grid.x_hi - f.grid.x_lo) * i / std::max(f.grid.nx - 1, 1);
        const double y = f.grid.y_lo + (f.grid.y_hi - f.grid.y_lo) * j / std::max(f.grid.ny - 1, 1);
        t.x.push_back(x);
        t.y.push_back(y);
        t.density.push_back(std::exp(h.log_pdf(Vec{{x, y}})));
      }
    write_level_set_csv(t, mix_path);
  }
  manifest.add(mix_path, hash);
  manifest.write(f.out);
  if (trace.aborted) throw NumericalError("fit aborted: " + *trace.aborted);
  out << "mean " << format_double(g.mu()(0)) << ' ' << format_double(g.mu()(1)) << " det "
      << format_double(g.sigma().determinant()) << " loss " << format_double(trace.iterations.back().loss) << '\n';
  return kExitOk;
}

int cmd_train(const TrainFlags& f, std::ostream& out) {
  const TrainConfig cfg = f.train_config();
  const auto [tr, te] = f.data(cfg.dataset_path.empty() ? f.train_path : cfg.dataset_path);
  const VaeArch arch = f.arch(tr.dim());
  const RunResult r = run_training(arch, tr, te, cfg);
  ensure_directory(f.out);
  Manifest manifest{"train"};
  write_run(f.out, "run", r, manifest);
  const std::string summary = out_path(f.out, "summary.csv");
  write_csv(summary, summary_table({r.row}));
  manifest.add(summary, r.record.config_hash);
  manifest.write(f.out);
  if (r.record.aborted) throw NumericalError("training aborted: " + *r.record.aborted);
  out << "train_recon " << format_double(r.row.final_train_recon) << " test_recon "
      << format_double(r.row.final_test_recon) << " div " << format_double(r.row.final_div) << " log_evidence "
      << format_double(r.row.log_evidence) << '\n';
  return kExitOk;
}

int cmd_sweep(const TrainFlags& f, const std::string& alphas, const std::string& families,
              const std::string& conventions, const std::string& seeds, std::ostream& out) {
  SweepConfig sweep;
  if (!f.config.empty()) {
    sweep = sweep_config_from_json(read_json(f.config));
  } else {
    sweep.base = f.train_config();
    sweep.alphas = parse_list<double>(alphas, parse_number);
    sweep.families = parse_list<Family>(families, [&](const std::string& s) { return f.spec.resolved_family(s); });
    sweep.conventions = parse_list<SkewConvention>(conventions, parse_convention);
    sweep.seeds = parse_list<std::uint64_t>(seeds, [](const std::string& s) {
      const double d = parse_number(s);
      if (d < 0 || d != std::floor(d)) throw InputError("seeds must be non-negative integers");
      return static_cast<std::uint64_t>(d);
    });
  }
  sweep.validate();
  const auto [tr, te] = f.data(sweep.base.dataset_path.empty() ? f.train_path : sweep.base.dataset_path);
  const VaeArch arch = f.arch(tr.dim());
  const auto results = run_sweep(arch, tr, te, sweep);
  ensure_directory(f.out);
  Manifest manifest{"sweep"};
  std::vector<SummaryRow> rows;
  bool aborted = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    write_run(f.out, "run_" + std::to_string(i), results[i], manifest);
    rows.push_back(results[i].row);
    aborted = aborted || results[i].record.aborted.has_value();
  }
  const std::string summary = out_path(f.out, "summary.csv");
  write_csv(summary, summary_table(rows));
  manifest.add(summary, config_hash(to_json(sweep)));
  const std::string sweep_path = out_path(f.out, "sweep.json");
  write_json(sweep_path, to_json(sweep));
  manifest.add(sweep_path, config_hash(to_json(sweep)));
  manifest.write(f.out);
  out << rows.size() << " runs written to " << summary << '\n';
  if (aborted) throw NumericalError("at least one run aborted; see the jsonl files");
  return kExitOk;
}

int cmd_integrand(const std::string& pa, const std::string& qa, const std::string& families, const SpecFlags& flags,
                  double lo, double hi, int points, const std::string& path, std::ostream& out) {
  const FullGaussian gp = parse_gaussian_arg(pa);
  const FullGaussian gq = parse_gaussian_arg(qa);
  if (gp.dim() != 1 || gq.dim() != 1) throw DimensionError("integrand dumps need 1-D Gaussians");
  if (points < 3 || points % 2 == 0) throw InputError("--points must be odd and >= 3");
  const DensityHandle p = gaussian_handle(gp), q = gaussian_handle(gq);
  if (!(lo < hi)) std::tie(lo, hi) = default_bounds_1d(p, q);

  std::vector<std::string> header{"x", "p", "q", "arithmetic_mean", "geometric_original", "geometric_primed"};
  std::vector<std::vector<double>> cols(header.size());
  const DensityHandle mix = mixture_handle({0.5, 0.5}, {gp, gq});
  const DensityHandle geo_o = geometric_mean_handle(p, q, flags.alpha, SkewConvention::Original);
  const DensityHandle geo_p = geometric_mean_handle(p, q, flags.alpha, SkewConvention::Primed);
  const double step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double x = lo + step * i;
    const Vec v{{x}};
    cols[0].push_back(x);
    cols[1].push_back(std::exp(p.log_pdf(v)));
    cols[2].push_back(std::exp(q.log_pdf(v)));
    cols[3].push_back(std::exp(mix.log_pdf(v)));
    cols[4].push_back(std::exp(geo_o.log_pdf(v)));
    cols[5].push_back(std::exp(geo_p.log_pdf(v)));
  }
  for (const auto& name : split_list(families)) {
    const DivergenceSpec spec = flags.spec_for(flags.resolved_family(name));
    const IntegrandTable t = tabulate_integrand(p, q, spec, lo, hi, points);
    header.push_back("integrand_" + std::string(to_string(spec.family)));
    cols.push_back(t.integrand);
    out << to_string(spec.family) << ' ' << format_double(simpson_sum(t.integrand, step)) << '\n';
  }
  if (header.size() == 6) throw InputError("--families must name at least one family");
  const fs::path target(path);
  if (target.has_parent_path()) ensure_directory(target.parent_path().string());
  write_numeric_csv(path, header, cols);
  return kExitOk;
}

int cmd_traverse(const std::string& model_path, const std::string& data, std::int64_t index, const std::string& dims,
                 Eigen::Index points, double lo, double hi, const std::string& path, std::ostream& out) {
  const VaeModel model = VaeModel::from_json(read_json(model_path));
  const Dataset d = load_dataset(resolve_data_path(data));
  if (index < 0 || index >= d.size()) throw InputError("--index out of range");
  const TraversalGrid g = latent_traversal(model, d.x.row(index).transpose(), parse_index_list(dims), points, lo, hi);
  const fs::path target(path);
  if (target.has_parent_path()) ensure_directory(target.parent_path().string());
  if (target.extension() == ".png")
    write_traversal_png(g, path);
  else
    write_traversal_csv(g, path);
  out << g.n_dims * g.n_points << " images written to " << path << '\n';
  return kExitOk;
}

}  // namespace

FullGaussian parse_gaussian_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') {
    try {
      return full_from_json(json::parse(arg));
    } catch (const json::exception& e) {
      throw InputError(std::string("inline Gaussian: ") + e.what());
    }
  }
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) return full_from_json(read_json(arg));
  const auto parts = split_list(arg);
  if (parts.size() == 2) {
    const double var = parse_number(parts[1]);
    if (!(var > 0.0)) throw InputError("variance must be positive in '" + arg + "'");
    return FullGaussian(Vec::Constant(1, parse_number(parts[0])), Mat::Constant(1, 1, var));
  }
  throw InputError("cannot read a Gaussian from '" + arg + "' (file, inline JSON or mean,variance)");
}

void SweepConfig::validate() const {
  if (alphas.empty() || families.empty() || conventions.empty() || seeds.empty())
    throw InputError("sweep lists must be non-empty");
  for (double a : alphas) check_skew(a);
  base.validate();
}

std::vector<TrainConfig> SweepConfig::cells() const {
  std::vector<TrainConfig> out;
  for (Family f : families) {
    const bool skewed = has_skew(f);
    const std::size_t n_conv = skewed ? conventions.size() : 1;
    const std::size_t n_alpha = skewed ? alphas.size() : 1;
    for (std::size_t c = 0; c < n_conv; ++c)
      for (std::size_t a = 0; a < n_alpha; ++a)
        for (auto seed : seeds) {
          TrainConfig cfg = base;
          cfg.reg.family = f;
          cfg.reg.convention = conventions[c];
          if (skewed) cfg.reg.alpha = alphas[a];
          cfg.seed = seed;
          out.push_back(cfg);
        }
  }
  return out;
}

json to_json(const SweepConfig& cfg) {
  json families = json::array(), conventions = json::array();
  for (auto f : cfg.families) families.push_back(to_string(f));
  for (auto c : cfg.conventions) conventions.push_back(to_string(c));
  return {{"alphas", cfg.alphas},
          {"families", families},
          {"conventions", conventions},
          {"seeds", cfg.seeds},
          {"base", to_json(cfg.base)}};
}

SweepConfig sweep_config_from_json(const json& j) {
  try {
    SweepConfig c;
    c.base = train_config_from_json(j.at("base"));
    c.alphas = j.at("alphas").get<std::vector<double>>();
    c.families.clear();
    for (const auto& f : j.at("families")) c.families.push_back(parse_family(f.get<std::string>()));
    c.conventions.clear();
    for (const auto& s : j.at("conventions")) c.conventions.push_back(parse_convention(s.get<std::string>()));
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("sweep config: ") + e.what());
  }
}

const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h{"family",           "convention", "alpha",          "seed",
                                          "final_train_recon", "final_test_recon", "final_div", "log_evidence"};
  return h;
}

CsvTable summary_table(const std::vector<SummaryRow>& rows) {
  CsvTable t;
  t.header = summary_header();
  for (const auto& r : rows)
    t.rows.push_back({r.family, r.convention, format_double(r.alpha), std::to_string(r.seed),
                      format_double(r.final_train_recon), format_double(r.final_test_recon),
                      format_double(r.final_div), format_double(r.log_evidence)});
  return t;
}

std::vector<SummaryRow> summary_rows_from_csv(const CsvTable& table) {
  const auto alpha = table.numeric_column("alpha");
  const auto seed = table.numeric_column("seed");
  const auto tr = table.numeric_column("final_train_recon");
  const auto te = table.numeric_column("final_test_recon");
  const auto dv = table.numeric_column("final_div");
  const auto ev = table.numeric_column("log_evidence");
  const auto fam = table.column("family"), conv = table.column("convention");
  std::vector<SummaryRow> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    out.push_back({table.rows[i][fam], table.rows[i][conv], alpha[i], static_cast<std::uint64_t>(seed[i]), tr[i],
                   te[i], dv[i], ev[i]});
  return out;
}

RunResult run_training(const VaeArch& arch, const Dataset& train_data, const Dataset& test_data,
                       const TrainConfig& cfg) {
  VaeModel model = VaeModel::init(arch, cfg.seed);
  TrainRecord record = train(model, train_data, test_data, cfg);
  SummaryRow row;
  row.family = to_string(cfg.reg.family);
  row.convention = to_string(cfg.reg.convention);
  row.alpha = cfg.reg.alpha;
  row.seed = cfg.seed;
  const EpochRecord& last = record.epochs.back();
  row.final_train_recon = last.train_recon;
  row.final_test_recon = last.test_recon;
  row.final_div = last.train_div;
  const Mat& eval_x = test_data.size() > 0 ? test_data.x : train_data.x;
  row.log_evidence = record.aborted
                         ? std::numeric_limits<double>::quiet_NaN()
                         : estimate_log_evidence(model, eval_x, kEvidenceSamples, derive_seed(cfg.seed, 4242)).mean;
  return {std::move(record), row, std::move(model)};
}

std::vector<RunResult> run_sweep(const VaeArch& arch, const Dataset& train_data, const Dataset& test_data,
                                 const SweepConfig& cfg) {
  cfg.validate();
  const auto cells = cfg.cells();
  std::vector<std::optional<RunResult>> slots(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      slots[static_cast<std::size_t>(i)] = run_training(arch, train_data, test_data, cells[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<RunResult> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skew geometric Jensen-Shannon divergences: closed forms, oracles, 2-D fits and VAE training", "gjs"};
  app.require_subcommand(1);

  SpecFlags div_flags;
  std::string div_a, div_b, div_json;
  std::vector<double> div_oracle;
  auto* div = app.add_subcommand("div", "divergence between two Gaussians");
  div_flags.add(div, false);
  div->add_option("a", div_a, "first Gaussian (JSON file, inline JSON or mean,variance)")->required();
  div->add_option("b", div_b, "second Gaussian")->required();
  div->add_option("--oracle", div_oracle, "Monte Carlo check: n seed")->expected(2);
  div->add_option("--json", div_json, "also write the result as JSON");

  FitFlags fit_flags;
  auto* fitc = app.add_subcommand("fit", "fit a bivariate Gaussian to mixture samples");
  fit_flags.spec.add(fitc, false);
  fitc->add_option("--mixture", fit_flags.mixture, "mixture JSON file or 'benchmark'");
  fitc->add_option("--samples", fit_flags.n_samples, "data samples drawn from the mixture");
  fitc->add_option("--iters", fit_flags.opt.iters);
  fitc->add_option("--lr", fit_flags.opt.lr);
  fitc->add_option("--model-samples", fit_flags.opt.n_model_samples);
  fitc->add_option("--seed", fit_flags.opt.seed);
  fitc->add_option("--fd-step", fit_flags.opt.fd_step);
  fitc->add_flag("--true-density", fit_flags.opt.use_true_density, "use the mixture density instead of a KDE");
  fitc->add_option("--grid-points", fit_flags.grid.nx, "level-set grid points per axis");
  fitc->add_option("--out", fit_flags.out, "output directory");

  TrainFlags train_flags;
  auto* trainc = app.add_subcommand("train", "train one VAE");
  train_flags.add(trainc);

  TrainFlags sweep_flags;
  std::string alphas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", families = "gjs-dual", conventions = "primed",
              seeds = "0";
  auto* sweepc = app.add_subcommand("sweep", "train over alpha x family x convention x seed");
  sweep_flags.add(sweepc);
  sweepc->add_option("--alphas", alphas, "comma separated");
  sweepc->add_option("--families", families, "comma separated");
  sweepc->add_option("--conventions", conventions, "comma separated");
  sweepc->add_option("--seeds", seeds, "comma separated");

  SpecFlags int_flags;
  std::string int_p, int_q, int_families = "gjs", int_out = "integrand.csv";
  double int_lo = 0.0, int_hi = 0.0;
  int int_points = 2001;
  auto* integrand = app.add_subcommand("integrand", "pointwise integrands of 1-D divergences as CSV");
  int_flags.add(integrand, false);
  integrand->add_option("--p", int_p, "first Gaussian")->required();
  integrand->add_option("--q", int_q, "second Gaussian")->required();
  integrand->add_option("--families", int_families, "comma separated");
  integrand->add_option("--lo", int_lo);
  integrand->add_option("--hi", int_hi, "defaults cover both densities");
  integrand->add_option("--points", int_points, "odd number of grid points");
  integrand->add_option("--out", int_out, "CSV path");

  std::string idx_in, idx_out;
  std::int64_t idx_limit = -1;
  auto* convert = app.add_subcommand("convert-idx", "convert IDX images to the GJSD float format");
  convert->add_option("input", idx_in)->required();
  convert->add_option("output", idx_out)->required();
  convert->add_option("--limit", idx_limit);

  std::string tr_model, tr_data = "mnist-test-images-idx3-ubyte", tr_dims = "0", tr_out = "traversal.png";
  std::int64_t tr_index = 0;
  Eigen::Index tr_points = 9;
  double tr_lo = -3.0, tr_hi = 3.0;
  auto* traverse = app.add_subcommand("traverse", "decode a sweep along latent coordinates");
  traverse->add_option("--model", tr_model, "model JSON written by train or sweep")->required();
  traverse->add_option("--data", tr_data);
  traverse->add_option("--index", tr_index, "example whose posterior mean anchors the sweep");
  traverse->add_option("--dims", tr_dims, "comma separated latent dimensions");
  traverse->add_option("--points", tr_points);
  traverse->add_option("--lo", tr_lo);
  traverse->add_option("--hi", tr_hi);
  traverse->add_option("--out", tr_out, ".png or .csv");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*div) return cmd_div(div_flags, div_a, div_b, div_oracle, div_json, out);
    if (*fitc) {
      fit_flags.grid.ny = fit_flags.grid.nx;
      return cmd_fit(fit_flags, out);
    }
    if (*trainc) return cmd_train(train_flags, out);
    if (*sweepc) return cmd_sweep(sweep_flags, alphas, families, conventions, seeds, out);
    if (*integrand)
      return cmd_integrand(int_p, int_q, int_families, int_flags, int_lo, int_hi, int_points, int_out, out);
    if (*convert) {
      const auto n = convert_idx(resolve_data_path(idx_in), idx_out, idx_limit);
      out << n << " images written to " << idx_out << '\n';
      return kExitOk;
    }
    if (*traverse) return cmd_traverse(tr_model, tr_data, tr_index, tr_dims, tr_points, tr_lo, tr_hi, tr_out, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace gjs
