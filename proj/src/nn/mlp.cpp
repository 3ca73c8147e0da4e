#include "ghrl/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ghrl/errors.hpp"
#include "ghrl/nn/kernels.hpp"

namespace ghrl::nn {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ShapeError("Mlp needs at least input and output sizes");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ShapeError("Mlp layer of width 0");
    offsets_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

std::span<double> Mlp::weights(std::size_t layer) {
  return {params_.data() + weight_offset(layer), sizes_[layer] * sizes_[layer + 1]};
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer] * sizes_[layer + 1]};
}
std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

Matrix Mlp::forward(const Matrix& x) const {
  Tape tape;
  return forward(x, tape);
}

Matrix Mlp::forward(const Matrix& x, Tape& tape) const {
  if (x.cols() != input_size()) {
    throw ShapeError("Mlp input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(input_size()));
  }
  const std::size_t batch = x.rows();
  tape.acts.resize(num_layers() + 1);
  tape.acts[0] = x;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const Matrix& in = tape.acts[l];
    Matrix& out = tape.acts[l + 1];
    out.resize(batch, sizes_[l + 1]);
    kernels::gemm(batch, sizes_[l + 1], sizes_[l], in.data(), weights(l).data(), out.data(), false);
    kernels::add_row_bias(batch, sizes_[l + 1], bias(l).data(), out.data());
    if (l + 1 < num_layers()) kernels::tanh_inplace(out.size(), out.data());
  }
  return tape.acts.back();
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Matrix in(1, x.size());
  std::copy(x.begin(), x.end(), in.data());
  const Matrix out = forward(in);
  return {out.data(), out.data() + out.size()};
}

void Mlp::backward(const Tape& tape, const Matrix& upstream, std::span<double> grads,
                   Matrix* input_grad) const {
  if (tape.acts.size() != num_layers() + 1) throw ShapeError("Mlp::backward: tape does not match");
  if (grads.size() != num_params()) throw ShapeError("Mlp::backward: gradient size mismatch");
  const std::size_t batch = tape.acts[0].rows();
  if (upstream.rows() != batch || upstream.cols() != output_size()) {
    throw ShapeError("Mlp::backward: upstream gradient shape mismatch");
  }
  Matrix delta = upstream;
  Matrix transposed;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const Matrix& act_in = tape.acts[l];

    // dW[in x out] += act_in^T * delta
    transposed.resize(in, batch);
    kernels::transpose(batch, in, act_in.data(), transposed.data());
    kernels::gemm(in, out, batch, transposed.data(), delta.data(),
                  grads.data() + weight_offset(l), true);
    kernels::column_sums(batch, out, delta.data(), grads.data() + bias_offset(l), true);

    if (l == 0 && input_grad == nullptr) break;
    // d(act_in)[batch x in] = delta * W^T
    transposed.resize(out, in);
    kernels::transpose(in, out, weights(l).data(), transposed.data());
    Matrix next(batch, in);
    kernels::gemm(batch, in, out, delta.data(), transposed.data(), next.data(), false);
    if (l > 0) kernels::tanh_backward(next.size(), act_in.data(), next.data());
    delta = std::move(next);
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
}

std::vector<std::size_t> layer_sizes(std::size_t input, std::size_t hidden, std::size_t depth,
                                     std::size_t output) {
  std::vector<std::size_t> sizes{input};
  for (std::size_t i = 0; i < depth; ++i) sizes.push_back(hidden);
  sizes.push_back(output);
  return sizes;
}

namespace {

// Rows of q[count x length] (count <= length) become orthonormal; modified
// Gram-Schmidt applied twice.
void orthonormalize_rows(std::size_t count, std::size_t length, std::vector<double>& q) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < count; ++j) {
      double* qj = q.data() + j * length;
      for (std::size_t i = 0; i < j; ++i) {
        const double* qi = q.data() + i * length;
        double dot = 0.0;
        for (std::size_t r = 0; r < length; ++r) dot += qi[r] * qj[r];
        for (std::size_t r = 0; r < length; ++r) qj[r] -= dot * qi[r];
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < length; ++r) norm += qj[r] * qj[r];
      norm = std::sqrt(norm);
      for (std::size_t r = 0; r < length; ++r) qj[r] /= norm;
    }
  }
}

}  // namespace

void init_orthogonal(Mlp& net, double hidden_gain, double output_gain, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::size_t in = net.sizes()[l];
    const std::size_t out = net.sizes()[l + 1];
    const double gain = l + 1 == net.num_layers() ? output_gain : hidden_gain;
    const std::size_t count = std::min(in, out);
    const std::size_t length = std::max(in, out);
    std::vector<double> q(count * length);
    for (double& v : q) v = gauss(rng);
    orthonormalize_rows(count, length, q);
    std::span<double> w = net.weights(l);
    if (in < out) {
      // W[in x out] has orthonormal rows.
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = gain * q[i];
    } else {
      // W[in x out] has orthonormal columns: W = q^T with q [out x in].
      for (std::size_t r = 0; r < out; ++r) {
        for (std::size_t c = 0; c < in; ++c) w[c * out + r] = gain * q[r * in + c];
      }
    }
    std::fill(net.bias(l).begin(), net.bias(l).end(), 0.0);
  }
}

}  // namespace ghrl::nn
