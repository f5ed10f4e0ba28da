#include "gjs/mlp.hpp"

#include "gjs/error.hpp"

namespace gjs {

const char* to_string(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  for (auto a : {Activation::Identity, Activation::ReLU, Activation::Tanh, Activation::Sigmoid})
    if (name == to_string(a)) return a;
  throw InputError("unknown activation '" + name + "'");
}

DenseStack::DenseStack(const std::vector<Eigen::Index>& sizes, Activation hidden, Activation last,
                       Eigen::Index offset)
    : hidden_(hidden), last_(last), end_(offset) {
  if (sizes.size() < 2) throw InputError("a dense stack needs at least one layer");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] < 1 || sizes[i + 1] < 1) throw InputError("layer widths must be positive");
    layers_.push_back({sizes[i], sizes[i + 1], end_});
    end_ += layers_.back().size();
  }
}

Eigen::Index DenseStack::param_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.size();
  return n;
}

Eigen::Map<const Mat> weight(const Vec& params, const Linear& l) {
  return Eigen::Map<const Mat>(params.data() + l.offset, l.out, l.in);
}

Eigen::Map<const Vec> bias(const Vec& params, const Linear& l) {
  return Eigen::Map<const Vec>(params.data() + l.offset + l.in * l.out, l.out);
}

Mat apply(Activation act, const Mat& z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::ReLU: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return z;
}

Mat derivative(Activation act, const Mat& z, const Mat& a) {
  switch (act) {
    case Activation::Identity: return Mat::Ones(z.rows(), z.cols());
    case Activation::ReLU: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: return (1.0 - a.array().square()).matrix();
    case Activation::Sigmoid: return (a.array() * (1.0 - a.array())).matrix();
  }
  return Mat::Ones(z.rows(), z.cols());
}

Mat DenseStack::forward(const Vec& params, const Mat& x, Cache* cache) const {
  if (x.cols() != layers_.front().in) throw DimensionError("input width does not match the first layer");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Mat a = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    Mat z(a.rows(), l.out);
    z.noalias() = a * weight(params, l).transpose();
    z.rowwise() += bias(params, l).transpose();
    Mat next = apply(activation(i), z);
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(std::move(z));
    }
    a = std::move(next);
  }
  return a;
}

Mat DenseStack::backward(const Vec& params, const Cache& cache, Mat d_out, Vec& grad, bool input_grad) const {
  Mat d = std::move(d_out);
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& l = layers_[k];
    const Mat& z = cache.pre[k];
    const Activation act = activation(k);
    if (act != Activation::Identity) {
      const Mat a = act == Activation::ReLU ? Mat() : apply(act, z);
      d.array() *= derivative(act, z, a).array();
    }
    Eigen::Map<Mat> gw(grad.data() + l.offset, l.out, l.in);
    Eigen::Map<Vec> gb(grad.data() + l.offset + l.in * l.out, l.out);
    gw.noalias() += d.transpose() * cache.inputs[k];
    gb += d.colwise().sum().transpose();
    if (k > 0 || input_grad) {
      Mat prev(d.rows(), l.in);
      prev.noalias() = d * weight(params, l);
      d = std::move(prev);
    }
  }
  return input_grad ? d : Mat();
}

}  // namespace gjs
