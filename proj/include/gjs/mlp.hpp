#pragma once

// Fully connected layers over a flat parameter vector. Rows of every
// activation matrix are examples.

#include <vector>

#include "gjs/gaussian.hpp"

namespace gjs {

enum class Activation { Identity, ReLU, Tanh, Sigmoid };

const char* to_string(Activation act);
Activation parse_activation(const std::string& name);

// Weight (out x in, column-major) at `offset`, bias (out) right after it.
struct Linear {
  Eigen::Index in = 0;
  Eigen::Index out = 0;
  Eigen::Index offset = 0;

  Eigen::Index size() const { return in * out + out; }
};

class DenseStack {
 public:
  struct Cache {
    std::vector<Mat> inputs;  // input of each layer
    std::vector<Mat> pre;     // pre-activation of each layer
  };

  DenseStack() = default;
  // Appends layers sizes[0] -> sizes[1] -> ... to the layout starting at
  // `offset`; every layer uses `hidden` except the last, which uses `last`.
  DenseStack(const std::vector<Eigen::Index>& sizes, Activation hidden, Activation last, Eigen::Index offset);

  Eigen::Index param_count() const;
  Eigen::Index end_offset() const { return end_; }
  const std::vector<Linear>& layers() const { return layers_; }

  Mat forward(const Vec& params, const Mat& x, Cache* cache = nullptr) const;
  // Accumulates parameter gradients into `grad` given d(loss)/d(output) and
  // returns d(loss)/d(input) (empty unless `input_grad`).
  Mat backward(const Vec& params, const Cache& cache, Mat d_out, Vec& grad, bool input_grad = true) const;

 private:
  std::vector<Linear> layers_;
  Activation hidden_ = Activation::ReLU;
  Activation last_ = Activation::Identity;
  Eigen::Index end_ = 0;

  Activation activation(std::size_t layer) const { return layer + 1 == layers_.size() ? last_ : hidden_; }
};

Eigen::Map<const Mat> weight(const Vec& params, const Linear& l);
Eigen::Map<const Vec> bias(const Vec& params, const Linear& l);

Mat apply(Activation act, const Mat& z);
// d act(z) / dz given the pre-activation z and the activation a = act(z).
Mat derivative(Activation act, const Mat& z, const Mat& a);

}  // namespace gjs
