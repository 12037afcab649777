#include "physmass/dense.hpp"

#include <cmath>
#include <string>

#include "physmass/errors.hpp"

namespace physmass {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::softplus: return "softplus";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "softplus") return Activation::softplus;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

double activate_derivative(Activation a, double pre) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::softplus: return sigmoid(pre);
    case Activation::sigmoid: {
      const double s = sigmoid(pre);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

DenseLayer::DenseLayer(Tensor2 w, Vec b, Activation act)
    : weight(std::move(w)), bias(std::move(b)), activation(act) {
  validate();
}

DenseLayer DenseLayer::glorot(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  if (in == 0 || out == 0) throw DimensionError("dense layer dims must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Tensor2 w(out, in);
  for (double& v : w.data) v = rng.uniform(-limit, limit);
  return DenseLayer(std::move(w), Vec(out, 0.0), act);
}

void DenseLayer::validate() const {
  if (weight.rows != bias.size()) {
    throw DimensionError("dense layer: weight has " + std::to_string(weight.rows) +
                         " rows but bias has " + std::to_string(bias.size()));
  }
  if (weight.data.size() != weight.rows * weight.cols) {
    throw DimensionError("dense layer: weight storage does not match shape");
  }
  if (!weight.all_finite() || !all_finite(bias)) {
    throw NumericError("dense layer: non-finite parameter");
  }
}

Vec dense_preactivation(const DenseLayer& layer, std::span<const double> x) {
  Vec y = matvec(layer.weight, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += layer.bias[i];
  return y;
}

Vec dense_forward(const DenseLayer& layer, std::span<const double> x) {
  Vec y = dense_preactivation(layer, x);
  if (layer.activation != Activation::identity) {
    for (double& v : y) v = activate(layer.activation, v);
  }
  return y;
}

DenseGradients dense_backward(const DenseLayer& layer, std::span<const double> x,
                              std::span<const double> grad_out) {
  if (grad_out.size() != layer.out_dim()) {
    throw DimensionError("dense_backward: grad_out length " + std::to_string(grad_out.size()) +
                         " vs out dim " + std::to_string(layer.out_dim()));
  }
  const Vec pre = dense_preactivation(layer, x);
  LayerGrad acc(layer);
  DenseGradients g;
  g.grad_x = dense_backward_accumulate(layer, x, pre, grad_out, acc);
  g.grad_w = std::move(acc.w);
  g.grad_b = std::move(acc.b);
  return g;
}

void LayerGrad::zero() {
  w.fill(0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

Vec dense_backward_accumulate(const DenseLayer& layer, std::span<const double> x,
                              std::span<const double> pre, std::span<const double> grad_out,
                              LayerGrad& acc) {
  const std::size_t out = layer.out_dim();
  const std::size_t in = layer.in_dim();
  if (x.size() != in || pre.size() != out || grad_out.size() != out) {
    throw DimensionError("dense_backward: shape mismatch with layer " + std::to_string(out) + "x" +
                         std::to_string(in));
  }
  Vec grad_x(in, 0.0);
  for (std::size_t r = 0; r < out; ++r) {
    const double d = grad_out[r] * activate_derivative(layer.activation, pre[r]);
    if (d == 0.0) continue;
    acc.b[r] += d;
    double* gw = acc.w.data.data() + r * in;
    const double* w = layer.weight.data.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) {
      gw[c] += d * x[c];
      grad_x[c] += d * w[c];
    }
  }
  return grad_x;
}

MlpGrad::MlpGrad(const Mlp& mlp) {
  layers.reserve(mlp.layers.size());
  for (const auto& l : mlp.layers) layers.emplace_back(l);
}

void MlpGrad::zero() {
  for (auto& l : layers) l.zero();
}

Vec mlp_forward(const Mlp& mlp, std::span<const double> x, MlpTrace* trace) {
  Vec cur(x.begin(), x.end());
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  for (const auto& layer : mlp.layers) {
    Vec pre = dense_preactivation(layer, cur);
    Vec out(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) out[i] = activate(layer.activation, pre[i]);
    if (trace) {
      trace->inputs.push_back(std::move(cur));
      trace->pre.push_back(std::move(pre));
    }
    cur = std::move(out);
  }
  if (trace) trace->output = cur;
  return cur;
}

Vec mlp_backward(const Mlp& mlp, const MlpTrace& trace, std::span<const double> grad_out,
                 MlpGrad& acc) {
  if (trace.inputs.size() != mlp.layers.size() || acc.layers.size() != mlp.layers.size()) {
    throw DimensionError("mlp_backward: trace/grad do not match network depth");
  }
  Vec g(grad_out.begin(), grad_out.end());
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    g = dense_backward_accumulate(mlp.layers[i], trace.inputs[i], trace.pre[i], g, acc.layers[i]);
  }
  return g;
}

Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& widths, Activation hidden,
             Activation last, Rng& rng) {
  if (widths.empty()) throw DimensionError("make_mlp: need at least one layer");
  Mlp mlp;
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const Activation act = (i + 1 == widths.size()) ? last : hidden;
    mlp.layers.push_back(DenseLayer::glorot(prev, widths[i], act, rng));
    prev = widths[i];
  }
  return mlp;
}

}  // namespace physmass
