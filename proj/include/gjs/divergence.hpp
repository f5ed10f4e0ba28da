#pragma once

#include <string>

#include "gjs/gaussian.hpp"

namespace gjs {

enum class Family { KLForward, KLReverse, JS, Lambda, GJS, GJSDual, MMD };

const char* to_string(Family family);
// Accepts the CLI spellings: kl-forward, kl-reverse, js, lambda, gjs, gjs-dual, mmd.
Family parse_family(const std::string& name);

// Which divergence to evaluate and how strongly to weight it in a loss.
// `convention` has no default: callers must say which skew they mean.
// The VAE regularizer normally uses the Primed one.
struct DivergenceSpec {
  DivergenceSpec(Family family_, SkewConvention convention_) : family(family_), convention(convention_) {}

  Family family;
  double alpha = 0.5;        // skew of GJS / GJSDual
  double lambda_skew = 0.5;  // mixture weight of the Lambda family
  SkewConvention convention;
  double weight = 1.0;         // multiplier on the divergence term of a loss
  double mmd_bandwidth = 1.0;  // Gaussian kernel width

  void validate() const;
};

// How gjs_full / gjs_dual_full evaluate: as a weighted sum of two KL
// divergences to the intermediate (default) or via the expanded matrix
// expression, kept as an independent cross-check.
enum class GjsForm { Composition, Expanded };

// KL(g1 || g2)
double kl_full(const FullGaussian& g1, const FullGaussian& g2);

// KL(N(mu, diag s) || N(0, I)): the standard VAE regularizer.
double kl_diag_reverse(const DiagonalGaussian& g);
// KL(N(0, I) || N(mu, diag s))
double kl_diag_forward(const DiagonalGaussian& g);

// (1-a) KL(g1 || N_a) + a KL(g2 || N_a)
double gjs_full(const FullGaussian& g1, const FullGaussian& g2, double alpha, SkewConvention conv,
                GjsForm form = GjsForm::Composition);
// (1-a) KL(N_a || g1) + a KL(N_a || g2)
double gjs_dual_full(const FullGaussian& g1, const FullGaussian& g2, double alpha, SkewConvention conv,
                     GjsForm form = GjsForm::Composition);

// gjs_full / gjs_dual_full with g2 = N(0, I), reduced per dimension.
double gjs_diag(const DiagonalGaussian& g, double alpha, SkewConvention conv);
double gjs_dual_diag(const DiagonalGaussian& g, double alpha, SkewConvention conv);

// (1-a)^2 KL(g1 || g2) + a^2 KL(g2 || g1).
//
// This is the quadratic form obtained by substituting the unnormalized
// product p^a q^(1-a) for the Primed intermediate. It differs from
// gjs_full(.., Primed) by log_geometric_normalizer(g1, g2, alpha, Primed),
// which is <= 0 and vanishes only at a in {0, 1} or when g1 == g2.
double gjs_primed_quadratic(const FullGaussian& g1, const FullGaussian& g2, double alpha);

// log Z for the geometric mean used by `conv`:
// Z = integral of g1^(1-w) g2^w, w = intermediate_skew(alpha, conv).
// Equals minus the skew Bhattacharyya distance.
double log_geometric_normalizer(const FullGaussian& g1, const FullGaussian& g2, double alpha,
                                SkewConvention conv);

// Unbiased U-statistic MMD^2 with kernel exp(-|x-y|^2 / (2 h^2)).
double mmd(const Mat& samples_p, const Mat& samples_q, double bandwidth);

// Median pairwise distance across the pooled samples (median heuristic).
double median_bandwidth(const Mat& samples_p, const Mat& samples_q);

// Closed-form value of spec.family between two Gaussians; throws
// UnsupportedError for families without one (JS, Lambda, MMD).
double closed_form(const FullGaussian& g1, const FullGaussian& g2, const DivergenceSpec& spec);

}  // namespace gjs
