#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "ghrl/nn/matrix.hpp"

namespace ghrl::nn {

// Fully connected network: tanh on hidden layers, identity on the output.
// Parameters live in one flat vector; layer l stores its weights as an
// [in x out] row-major block followed by `out` biases.
class Mlp {
 public:
  // Activations of every layer from a training forward pass.
  struct Tape {
    std::vector<Matrix> acts;  // acts[0] = input, acts[l + 1] = output of layer l
  };

  Mlp() = default;
  // sizes = {input, hidden..., output}; parameters start at zero.
  explicit Mlp(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  // Batch forward; rows of x are samples. Throws ShapeError on width mismatch.
  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Tape& tape) const;
  std::vector<double> forward(std::span<const double> x) const;

  // Adds d(loss)/d(params) into `grads` given d(loss)/d(output) for the batch
  // recorded in `tape`. Optionally writes d(loss)/d(input).
  void backward(const Tape& tape, const Matrix& upstream, std::span<double> grads,
                Matrix* input_grad = nullptr) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Builds {input, hidden x depth, output}.
std::vector<std::size_t> layer_sizes(std::size_t input, std::size_t hidden, std::size_t depth,
                                     std::size_t output);

// Orthogonal initialisation: each weight block is a scaled matrix with
// orthonormal rows or columns (whichever is shorter), biases zero. Hidden
// layers use `hidden_gain`, the output layer `output_gain`.
void init_orthogonal(Mlp& net, double hidden_gain, double output_gain, std::mt19937_64& rng);

}  // namespace ghrl::nn
