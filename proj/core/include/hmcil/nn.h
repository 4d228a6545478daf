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

//
// Dense network engine
//
// A small multilayer perceptron with exact reverse-mode gradients with
// respect to parameters and inputs. The final layer is always a linear
// classifier head; the activations feeding it are the embedding.
//

#ifndef HMCIL_NN_H_
#define HMCIL_NN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "hmcil/matrix.h"

namespace hmcil {

enum class Activation { kIdentity, kRelu };

struct Sample {
  std::vector<double> x;
  int label = 0;
  bool synthetic = false;

  bool operator==(const Sample&) const = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

// Parameters of a multilayer perceptron. Also used as the gradient and
// optimizer-state container.
class Network {
 public:
  Network() = default;
  // Throws ShapeError if consecutive layer widths disagree.
  explicit Network(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  std::size_t num_layers() const { return layers_.size(); }

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t embedding_dim() const;
  // Widths: input, hidden..., output.
  std::vector<std::size_t> arch() const;
  std::size_t parameter_count() const;

  // Shape consistency and finiteness; throws ShapeError / NumericError.
  void validate() const;

  Network zeros_like() const;
  // this += alpha * other
  void axpy(double alpha, const Network& other);
  void scale(double alpha);
  double squared_norm() const;
  // Weights then bias of layer `l`, flattened.
  std::vector<double> layer_values(std::size_t l) const;

  bool operator==(const Network&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

// ReLU hidden layers, linear head. Weights use He-uniform init.
Network make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                 std::size_t num_classes, std::uint64_t seed);

// Adds `extra` output columns initialized from U(-scale, scale); existing
// rows of the head are preserved bit-for-bit.
void grow_head(Network& net, std::size_t extra, std::mt19937_64& rng,
               double scale = 0.01);

Matrix to_matrix(std::span<const Sample> samples);
std::vector<int> labels_of(std::span<const Sample> samples);

// activations[0] is the input; activations[l + 1] is the output of layer l.
struct ForwardTrace {
  std::vector<Matrix> activations;

  const Matrix& logits() const { return activations.back(); }
  const Matrix& embeddings() const {
    return activations[activations.size() - 2];
  }
};

ForwardTrace forward_trace(const Network& net, const Matrix& inputs);

struct ForwardResult {
  Matrix logits;
  Matrix embeddings;
};

ForwardResult forward(const Network& net, const Matrix& inputs);
ForwardResult forward(const Network& net, std::span<const Sample> batch);

// Embedding only; skips the head.
Matrix embed(const Network& net, const Matrix& inputs);

Matrix softmax_rows(const Matrix& logits, double temperature = 1.0);

enum class LossKind { kCrossEntropy, kCrossEntropyDistill };

// Accepts "ce" / "cross-entropy" and "ce+kd" / "cross-entropy+distillation".
LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::kCrossEntropy;
  // Distillation only: soft targets come from the teacher's first
  // `old_classes` logits at `temperature`.
  const Network* teacher = nullptr;
  std::size_t old_classes = 0;
  double temperature = 2.0;
  double weight = 1.0;
};

// Mean loss over the batch.
double loss_value(const Network& net, const Matrix& inputs,
                  std::span<const int> labels, const LossSpec& spec = {});

struct ParamGradient {
  double loss = 0.0;
  Network grad;
};

ParamGradient grad_params(const Network& net, const Matrix& inputs,
                          std::span<const int> labels,
                          const LossSpec& spec = {});

// Scalar objective on the embedding matrix. Must write d(value)/d(embedding)
// into `grad` (pre-sized to match `embeddings`) and return the value.
using EmbeddingObjective =
    std::function<double(const Matrix& embeddings, Matrix& grad)>;

struct InputGradient {
  double value = 0.0;
  Matrix grad;  // same shape as the inputs
};

InputGradient grad_inputs(const Network& net, const Matrix& inputs,
                          const EmbeddingObjective& objective);

// Gradient with respect to the inputs of <cotangent, grad_params(CE)>.
// This is the vector-Jacobian product needed to differentiate
// gradient-matching objectives through the parameter gradient.
Matrix grad_inputs_of_param_grad(const Network& net, const Matrix& inputs,
                                 std::span<const int> labels,
                                 const Network& cotangent);

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

// Momentum SGD with the usual heavy-ball recurrence:
//   d = g + wd * p;  v = mu * v + d;  p -= lr * v
class SgdOptimizer {
 public:
  // Throws ConfigError for lr <= 0, ShapeError on shape mismatch and
  // NumericError (with the layer index) if the gradient is not finite.
  void step(Network& model, const Network& grad, const SgdOptions& options);
  void reset() { velocity_.reset(); }
  const std::optional<Network>& velocity() const { return velocity_; }

 private:
  std::optional<Network> velocity_;
};

Network sgd_step(const Network& model, const Network& grad,
                 const SgdOptions& options, SgdOptimizer& state);

}  // namespace hmcil

#endif  // HMCIL_NN_H_
