// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hmcil/nn.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hmcil/errors.h"

namespace hmcil {
namespace {

// out = in * W^T + b, row by row.
Matrix affine(const DenseLayer& layer, const Matrix& in) {
  Matrix out(in.rows(), layer.out());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto x = in.row(r);
    auto y = out.row(r);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      y[o] = layer.bias[o] + dot(layer.weight.row(o), x);
    }
  }
  return out;
}

void apply_activation(Activation act, Matrix& m) {
  if (act == Activation::kRelu) {
    for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
  }
}

// g *= activation'(post); for ReLU the post-activation carries the mask.
void mask_by_activation(Activation act, const Matrix& post, Matrix& g) {
  if (act != Activation::kRelu) return;
  auto p = post.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!(p[i] > 0.0)) gv[i] = 0.0;
  }
}

// Returns g * W  (n x out) * (out x in) -> n x in.
Matrix times_weight(const Matrix& g, const Matrix& weight) {
  Matrix out(g.rows(), weight.cols());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    auto gr = g.row(r);
    auto orow = out.row(r);
    for (std::size_t o = 0; o < weight.rows(); ++o) {
      const double go = gr[o];
      if (go == 0.0) continue;
      auto w = weight.row(o);
      for (std::size_t i = 0; i < weight.cols(); ++i) orow[i] += go * w[i];
    }
  }
  return out;
}

void check_batch(const Network& net, const Matrix& inputs) {
  if (net.num_layers() == 0) throw ShapeError("network has no layers");
  if (inputs.rows() == 0) throw ShapeError("empty batch");
  if (inputs.cols() != net.input_dim()) {
    throw ShapeError("feature dimension " + std::to_string(inputs.cols()) +
                     " does not match network input width " +
                     std::to_string(net.input_dim()));
  }
}

void check_labels(const Network& net, const Matrix& inputs,
                  std::span<const int> labels) {
  if (labels.size() != inputs.rows()) {
    throw ShapeError("label count does not match batch size");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= net.output_dim()) {
      throw ShapeError("label " + std::to_string(y) +
                       " outside the classifier head");
    }
  }
}

// Loss value and d(mean loss)/d(logits).
double logits_gradient(const Matrix& logits, std::span<const int> labels,
                       const LossSpec& spec, const Matrix* teacher_logits,
                       Matrix& dlogits) {
  const std::size_t n = logits.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix p = softmax_rows(logits);
  dlogits = Matrix(n, logits.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    auto pr = p.row(r);
    auto dr = dlogits.row(r);
    const auto y = static_cast<std::size_t>(labels[r]);
    loss -= std::log(std::max(pr[y], 1e-300));
    for (std::size_t c = 0; c < pr.size(); ++c) dr[c] = pr[c] * inv_n;
    dr[y] -= inv_n;
  }
  if (spec.kind == LossKind::kCrossEntropyDistill && spec.old_classes > 0) {
    const std::size_t old = spec.old_classes;
    const double t = spec.temperature;
    for (std::size_t r = 0; r < n; ++r) {
      // Soft cross-entropy between tempered softmaxes over the old classes.
      auto student = logits.row(r).subspan(0, old);
      auto teacher = teacher_logits->row(r).subspan(0, old);
      const double smax = *std::max_element(student.begin(), student.end());
      const double tmax = *std::max_element(teacher.begin(), teacher.end());
      double sz = 0.0, tz = 0.0;
      for (std::size_t c = 0; c < old; ++c) {
        sz += std::exp((student[c] - smax) / t);
        tz += std::exp((teacher[c] - tmax) / t);
      }
      auto dr = dlogits.row(r);
      for (std::size_t c = 0; c < old; ++c) {
        const double q = std::exp((teacher[c] - tmax) / t) / tz;
        const double log_ps = (student[c] - smax) / t - std::log(sz);
        loss -= spec.weight * q * log_ps;
        dr[c] += spec.weight * (std::exp(log_ps) - q) / t * inv_n;
      }
    }
  }
  return loss * inv_n;
}

Network backprop_params(const Network& net, const ForwardTrace& trace,
                        Matrix delta) {
  Network grad = net.zeros_like();
  const auto& layers = net.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& a = trace.activations[l];
    auto& g = grad.mutable_layers()[l];
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto dr = delta.row(r);
      auto ar = a.row(r);
      for (std::size_t o = 0; o < dr.size(); ++o) {
        const double d = dr[o];
        g.bias[o] += d;
        if (d == 0.0) continue;
        auto wr = g.weight.row(o);
        for (std::size_t i = 0; i < ar.size(); ++i) wr[i] += d * ar[i];
      }
    }
    if (l > 0) {
      Matrix next = times_weight(delta, layers[l].weight);
      mask_by_activation(layers[l - 1].activation, trace.activations[l], next);
      delta = std::move(next);
    }
  }
  return grad;
}

}  // namespace

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.out()) {
      throw ShapeError("bias width mismatch in layer " + std::to_string(l));
    }
    if (l > 0 && layers_[l - 1].out() != layer.in()) {
      throw ShapeError("layer " + std::to_string(l) +
                       " input width does not match previous output");
    }
  }
}

std::size_t Network::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in();
}

std::size_t Network::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out();
}

std::size_t Network::embedding_dim() const {
  return layers_.empty() ? 0 : layers_.back().in();
}

std::vector<std::size_t> Network::arch() const {
  std::vector<std::size_t> widths;
  if (layers_.empty()) return widths;
  widths.push_back(input_dim());
  for (const auto& layer : layers_) widths.push_back(layer.out());
  return widths;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

void Network::validate() const {
  Network copy(layers_);  // shape checks
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (double v : layers_[l].weight.values()) {
      if (!std::isfinite(v)) throw NumericError("non-finite weight", l);
    }
    for (double v : layers_[l].bias) {
      if (!std::isfinite(v)) throw NumericError("non-finite bias", l);
    }
  }
}

Network Network::zeros_like() const {
  std::vector<DenseLayer> zero;
  zero.reserve(layers_.size());
  for (const auto& layer : layers_) {
    zero.push_back({Matrix(layer.out(), layer.in()),
                    std::vector<double>(layer.out(), 0.0), layer.activation});
  }
  return Network(std::move(zero));
}

void Network::axpy(double alpha, const Network& other) {
  if (other.layers_.size() != layers_.size()) {
    throw ShapeError("axpy: layer count mismatch");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& dst = layers_[l];
    const auto& src = other.layers_[l];
    if (dst.weight.rows() != src.weight.rows() ||
        dst.weight.cols() != src.weight.cols()) {
      throw ShapeError("axpy: shape mismatch in layer " + std::to_string(l));
    }
    auto dw = dst.weight.values();
    auto sw = src.weight.values();
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += alpha * sw[i];
    for (std::size_t i = 0; i < dst.bias.size(); ++i) {
      dst.bias[i] += alpha * src.bias[i];
    }
  }
}

void Network::scale(double alpha) {
  for (auto& layer : layers_) {
    for (double& v : layer.weight.values()) v *= alpha;
    for (double& v : layer.bias) v *= alpha;
  }
}

double Network::squared_norm() const {
  double s = 0.0;
  for (const auto& layer : layers_) {
    s += dot(layer.weight.values(), layer.weight.values());
    s += dot(layer.bias, layer.bias);
  }
  return s;
}

std::vector<double> Network::layer_values(std::size_t l) const {
  const auto& layer = layers_.at(l);
  std::vector<double> out(layer.weight.values().begin(),
                          layer.weight.values().end());
  out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  return out;
}

Network make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                 std::size_t num_classes, std::uint64_t seed) {
  if (input_dim == 0 || num_classes == 0) {
    throw ConfigError("make_mlp: input and output widths must be positive");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t in = input_dim;
  auto make_layer = [&](std::size_t out, Activation act) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0), act};
    for (double& w : layer.weight.values()) w = dist(rng);
    layers.push_back(std::move(layer));
    in = out;
  };
  for (std::size_t width : hidden) {
    if (width == 0) throw ConfigError("make_mlp: zero-width hidden layer");
    make_layer(width, Activation::kRelu);
  }
  // Head is Xavier-scaled.
  const std::size_t head_in = in;
  const double bound =
      std::sqrt(6.0 / static_cast<double>(head_in + num_classes));
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseLayer head{Matrix(num_classes, head_in),
                  std::vector<double>(num_classes, 0.0), Activation::kIdentity};
  for (double& w : head.weight.values()) w = dist(rng);
  layers.push_back(std::move(head));
  return Network(std::move(layers));
}

void grow_head(Network& net, std::size_t extra, std::mt19937_64& rng,
               double scale) {
  if (net.num_layers() == 0) throw ShapeError("grow_head: empty network");
  if (extra == 0) return;
  auto& head = net.mutable_layers().back();
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> row(head.in());
  for (std::size_t c = 0; c < extra; ++c) {
    for (double& w : row) w = dist(rng);
    head.weight.append_row(row);
    head.bias.push_back(dist(rng));
  }
}

Matrix to_matrix(std::span<const Sample> samples) {
  Matrix m;
  for (const auto& s : samples) m.append_row(s.x);
  return m;
}

std::vector<int> labels_of(std::span<const Sample> samples) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return labels;
}

ForwardTrace forward_trace(const Network& net, const Matrix& inputs) {
  check_batch(net, inputs);
  ForwardTrace trace;
  trace.activations.reserve(net.num_layers() + 1);
  trace.activations.push_back(inputs);
  for (const auto& layer : net.layers()) {
    Matrix out = affine(layer, trace.activations.back());
    apply_activation(layer.activation, out);
    trace.activations.push_back(std::move(out));
  }
  return trace;
}

ForwardResult forward(const Network& net, const Matrix& inputs) {
  ForwardTrace trace = forward_trace(net, inputs);
  ForwardResult result;
  result.embeddings = trace.embeddings();
  result.logits = std::move(trace.activations.back());
  return result;
}

ForwardResult forward(const Network& net, std::span<const Sample> batch) {
  if (batch.empty()) throw ShapeError("empty batch");
  return forward(net, to_matrix(batch));
}

Matrix embed(const Network& net, const Matrix& inputs) {
  check_batch(net, inputs);
  Matrix a = inputs;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    Matrix out = affine(layers[l], a);
    apply_activation(layers[l].activation, out);
    a = std::move(out);
  }
  return a;
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto pr = p.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      pr[c] = std::exp((z[c] - zmax) / temperature);
      total += pr[c];
    }
    for (double& v : pr) v /= total;
  }
  return p;
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "ce" || name == "cross-entropy") return LossKind::kCrossEntropy;
  if (name == "ce+kd" || name == "cross-entropy+distillation") {
    return LossKind::kCrossEntropyDistill;
  }
  throw ConfigError("unknown loss kind '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  return kind == LossKind::kCrossEntropy ? "ce" : "ce+kd";
}

double loss_value(const Network& net, const Matrix& inputs,
                  std::span<const int> labels, const LossSpec& spec) {
  return grad_params(net, inputs, labels, spec).loss;
}

ParamGradient grad_params(const Network& net, const Matrix& inputs,
                          std::span<const int> labels, const LossSpec& spec) {
  check_batch(net, inputs);
  check_labels(net, inputs, labels);
  std::optional<Matrix> teacher_logits;
  if (spec.kind == LossKind::kCrossEntropyDistill) {
    if (spec.old_classes > 0) {
      if (spec.teacher == nullptr) {
        throw ConfigError("distillation loss requires a teacher network");
      }
      if (spec.old_classes > spec.teacher->output_dim() ||
          spec.old_classes > net.output_dim()) {
        throw ShapeError("distillation class count exceeds a head width");
      }
      teacher_logits = forward(*spec.teacher, inputs).logits;
    }
  } else if (spec.kind != LossKind::kCrossEntropy) {
    throw ConfigError("unknown loss kind");
  }
  ForwardTrace trace = forward_trace(net, inputs);
  Matrix dlogits;
  ParamGradient out;
  out.loss = logits_gradient(trace.logits(), labels, spec,
                             teacher_logits ? &*teacher_logits : nullptr,
                             dlogits);
  out.grad = backprop_params(net, trace, std::move(dlogits));
  return out;
}

InputGradient grad_inputs(const Network& net, const Matrix& inputs,
                          const EmbeddingObjective& objective) {
  if (!objective) throw ConfigError("grad_inputs: empty objective");
  ForwardTrace trace = forward_trace(net, inputs);
  const auto& layers = net.layers();
  const Matrix& emb = trace.embeddings();
  Matrix g(emb.rows(), emb.cols());
  InputGradient out;
  out.value = objective(emb, g);
  // Back through every layer below the head.
  for (std::size_t l = layers.size() - 1; l-- > 0;) {
    mask_by_activation(layers[l].activation, trace.activations[l + 1], g);
    g = times_weight(g, layers[l].weight);
  }
  out.grad = std::move(g);
  return out;
}

Matrix grad_inputs_of_param_grad(const Network& net, const Matrix& inputs,
                                 std::span<const int> labels,
                                 const Network& cotangent) {
  check_batch(net, inputs);
  check_labels(net, inputs, labels);
  const auto& layers = net.layers();
  const auto& cot = cotangent.layers();
  if (cot.size() != layers.size()) {
    throw ShapeError("cotangent layer count mismatch");
  }
  const std::size_t n = inputs.rows();
  const std::size_t depth = layers.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  ForwardTrace trace = forward_trace(net, inputs);
  Matrix p = softmax_rows(trace.logits());

  // Backprop deltas of the mean cross-entropy, one per layer.
  std::vector<Matrix> delta(depth);
  delta[depth - 1] = Matrix(n, net.output_dim());
  for (std::size_t r = 0; r < n; ++r) {
    auto dr = delta[depth - 1].row(r);
    auto pr = p.row(r);
    for (std::size_t c = 0; c < dr.size(); ++c) dr[c] = pr[c] * inv_n;
    dr[static_cast<std::size_t>(labels[r])] -= inv_n;
  }
  for (std::size_t l = depth - 1; l-- > 0;) {
    delta[l] = times_weight(delta[l + 1], layers[l + 1].weight);
    mask_by_activation(layers[l].activation, trace.activations[l + 1],
                       delta[l]);
  }

  // phi = sum_l sum_rows delta_l . u_l  with  u_l = a_l V_l^T + v_l.
  std::vector<Matrix> u(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    u[l] = affine(cot[l], trace.activations[l]);
  }
  // w = d(phi)/d(delta_{depth-1}); deltas are linear in the last one.
  Matrix w = u[0];
  for (std::size_t l = 1; l < depth; ++l) {
    mask_by_activation(layers[l - 1].activation, trace.activations[l], w);
    Matrix next = u[l];
    for (std::size_t r = 0; r < n; ++r) {
      auto wr = w.row(r);
      auto nr = next.row(r);
      for (std::size_t o = 0; o < layers[l].out(); ++o) {
        nr[o] += dot(layers[l].weight.row(o), wr);
      }
    }
    w = std::move(next);
  }

  // Through the softmax: d(delta)/d(z) = (diag(p) - p p^T) / n.
  Matrix gz(n, net.output_dim());
  for (std::size_t r = 0; r < n; ++r) {
    auto pr = p.row(r);
    auto wr = w.row(r);
    const double pw = dot(pr, wr);
    auto gr = gz.row(r);
    for (std::size_t c = 0; c < gr.size(); ++c) {
      gr[c] = pr[c] * (wr[c] - pw) * inv_n;
    }
  }

  // Ordinary backprop to the input, adding the direct u_l contributions.
  for (std::size_t l = depth; l-- > 0;) {
    Matrix ga = times_weight(gz, layers[l].weight);
    Matrix direct = times_weight(delta[l], cot[l].weight);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga.values()[i] += direct.values()[i];
    }
    if (l == 0) return ga;
    mask_by_activation(layers[l - 1].activation, trace.activations[l], ga);
    gz = std::move(ga);
  }
  return {};
}

void SgdOptimizer::step(Network& model, const Network& grad,
                        const SgdOptions& options) {
  if (!(options.lr > 0.0)) throw ConfigError("sgd: lr must be positive");
  const auto& g = grad.layers();
  if (g.size() != model.num_layers()) {
    throw ShapeError("sgd: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < g.size(); ++l) {
    const auto& ml = model.layers()[l];
    if (g[l].weight.rows() != ml.weight.rows() ||
        g[l].weight.cols() != ml.weight.cols() ||
        g[l].bias.size() != ml.bias.size()) {
      throw ShapeError("sgd: gradient shape mismatch in layer " +
                       std::to_string(l));
    }
    for (double v : g[l].weight.values()) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient", l);
    }
    for (double v : g[l].bias) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient", l);
    }
  }
  Network direction = grad;
  if (options.weight_decay != 0.0) direction.axpy(options.weight_decay, model);
  if (options.momentum != 0.0) {
    if (!velocity_ || velocity_->arch() != model.arch()) {
      velocity_ = model.zeros_like();
    }
    velocity_->scale(options.momentum);
    velocity_->axpy(1.0, direction);
    model.axpy(-options.lr, *velocity_);
  } else {
    model.axpy(-options.lr, direction);
  }
}

Network sgd_step(const Network& model, const Network& grad,
                 const SgdOptions& options, SgdOptimizer& state) {
  Network next = model;
  state.step(next, grad, options);
  return next;
}

}  // namespace hmcil
