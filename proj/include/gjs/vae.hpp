#pragma once

// MLP variational autoencoder with a diagonal Gaussian posterior, a standard
// normal prior and a pluggable latent regularizer.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gjs/dataset.hpp"
#include "gjs/divergence.hpp"
#include "gjs/io.hpp"
#include "gjs/mlp.hpp"

namespace gjs {

enum class DecoderOutput { MSE, Bernoulli };
enum class LatentMode { SampleLatent, MeanLatent };

const char* to_string(DecoderOutput out);
DecoderOutput parse_decoder_output(const std::string& name);

struct VaeArch {
  Eigen::Index input_dim = 784;
  std::vector<Eigen::Index> hidden_dims{256, 256};
  Eigen::Index latent_dim = 10;
  DecoderOutput decoder_output = DecoderOutput::MSE;
  Activation hidden_activation = Activation::ReLU;

  void validate() const;
};

json to_json(const VaeArch& arch);
VaeArch vae_arch_from_json(const json& j);

class VaeModel {
 public:
  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  static VaeModel init(const VaeArch& arch, std::uint64_t seed);

  const VaeArch& arch() const { return arch_; }
  const Vec& params() const { return params_; }
  Vec& params() { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  // Layouts inside params(): encoder trunk, mu head, log-variance head, decoder.
  const DenseStack& encoder() const { return encoder_; }
  const Linear& mu_head() const { return mu_head_; }
  const Linear& log_var_head() const { return log_var_head_; }
  const DenseStack& decoder() const { return decoder_; }

  json to_json() const;
  static VaeModel from_json(const json& j);

 private:
  explicit VaeModel(const VaeArch& arch);

  VaeArch arch_;
  DenseStack encoder_;
  Linear mu_head_;
  Linear log_var_head_;
  DenseStack decoder_;
  Vec params_;
};

// Posterior parameters for a batch: row i holds example i.
struct PosteriorBatch {
  Mat mu;
  Mat log_var;

  Eigen::Index size() const { return mu.rows(); }
  DiagonalGaussian row(Eigen::Index i) const;
};

PosteriorBatch encode(const VaeModel& model, const Mat& x);
// Decoded means in [0, 1] (sigmoid of the decoder logits).
Mat decode(const VaeModel& model, const Mat& z);

// z = mu + exp(log_var / 2) * eps, eps ~ N(0, I) drawn from `seed`.
Mat reparam_sample(const PosteriorBatch& post, std::uint64_t seed);

// Per-example regularizer against N(0, I) for the diagonal families.
double diag_divergence(const DiagonalGaussian& g, const DivergenceSpec& spec);

struct LossTerms {
  double recon = 0.0;
  double div = 0.0;
  double total = 0.0;
};

// recon: per-example summed squared error (MSE) or Bernoulli negative
// log-likelihood, averaged over the batch. div: batch mean of the diagonal
// divergence, or MMD^2 between the latents and as many prior draws.
// total = recon + reg.weight * div. When `grad` is given it receives
// d(total)/d(params).
LossTerms loss(const VaeModel& model, const Mat& x, const DivergenceSpec& reg, std::uint64_t seed,
               LatentMode mode = LatentMode::SampleLatent, Vec* grad = nullptr);

// Worst relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
// over `n_params` parameters picked at random, central differences with
// step `eps`.
double grad_check(const VaeModel& model, const Mat& x, const DivergenceSpec& reg, std::uint64_t seed, double eps,
                  int n_params = 50);

struct TrainConfig {
  DivergenceSpec reg{Family::KLReverse, SkewConvention::Primed};
  int batch_size = 64;
  int epochs = 20;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string dataset_path;
  LatentMode eval_mode = LatentMode::MeanLatent;

  void validate() const;
};

json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const json& j);

struct EpochRecord {
  int epoch = 0;
  double train_recon = 0.0;
  double train_div = 0.0;
  double test_recon = 0.0;
  double test_div = 0.0;
  double wall_time_s = 0.0;  // cumulative; not part of the determinism contract
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;  // epoch 0 is the evaluation before any update
  std::string config_hash;
  std::uint64_t seed = 0;
  std::optional<std::string> aborted;

  // Per-epoch lines without wall time, for determinism comparisons.
  std::string deterministic_digest() const;
};

std::string to_jsonl(const TrainRecord& record);
TrainRecord train_record_from_jsonl(const std::string& text);

// Mean loss terms over a whole dataset in chunks.
LossTerms evaluate(const VaeModel& model, const Mat& x, const DivergenceSpec& reg, LatentMode mode,
                   std::uint64_t seed);

// Adam (0.9, 0.999, 1e-8) over shuffled minibatches. `test` may be empty.
TrainRecord train(VaeModel& model, const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg,
                  const std::string& arch_tag = "");

struct EvidenceEstimate {
  double mean = 0.0;
  std::vector<double> per_example;
  std::optional<std::pair<double, double>> ci95;
};

// log p(x) ~ log (1/k) sum_j p(x | z_j), z_j ~ N(0, I), averaged over the
// batch. The MSE decoder is read as a unit-variance Gaussian likelihood.
EvidenceEstimate estimate_log_evidence(const VaeModel& model, const Mat& x, int k, std::uint64_t seed,
                                       bool bootstrap = false, int n_resamples = 1000);

// (|dims|, n_points, input_dim) decoded images, row-major.
struct TraversalGrid {
  Eigen::Index n_dims = 0;
  Eigen::Index n_points = 0;
  Eigen::Index input_dim = 0;
  std::vector<double> values;

  double at(Eigen::Index d, Eigen::Index p, Eigen::Index k) const {
    return values[static_cast<std::size_t>((d * n_points + p) * input_dim + k)];
  }
};

// Other coordinates stay at the posterior mean of x; n_points == 1 uses lo.
TraversalGrid latent_traversal(const VaeModel& model, const Vec& x, const std::vector<Eigen::Index>& dims,
                               Eigen::Index n_points, double lo, double hi);

// Tiles a traversal of square images into one grayscale PNG.
void write_traversal_png(const TraversalGrid& grid, const std::string& path);
void write_traversal_csv(const TraversalGrid& grid, const std::string& path);

}  // namespace gjs
