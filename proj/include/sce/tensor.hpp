#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace sce {

// Dense row-major float64 array, rank 1..3. All reductions in this module run
// in a fixed ascending index order so repeated calls are bit-identical.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  Tensor(std::initializer_list<std::size_t> s);

  static Tensor vec(std::initializer_list<double> values);
  static Tensor mat(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rank() const { return shape.size(); }
  std::size_t numel() const { return data.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
};

// a[r x k] * b[k x c]. Summation over k is left-to-right for every output
// element, so results are reproducible to the bit.
Tensor matmul(const Tensor& a, const Tensor& b);
// Accumulates dL/da and dL/db given dL/dout. grad_a/grad_b must already have
// the shapes of a/b (zero-filled by the caller on first use).
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out,
                     Tensor& grad_a, Tensor& grad_b);

// A[r x c] * x[c] -> y[r], same determinism contract as matmul.
Tensor matvec(const Tensor& a, const Tensor& x);

// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& v);
// dL/dv from y = softmax(v) and dL/dy.
Tensor softmax_backward(const Tensor& y, const Tensor& grad_y);

// gain * (v - mean) / sqrt(var + eps) + bias with population variance.
Tensor layer_norm(const Tensor& v, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
void layer_norm_backward(const Tensor& v, const Tensor& gain, double eps,
                         const Tensor& grad_out, Tensor& grad_v, Tensor& grad_gain,
                         Tensor& grad_bias);

// Exact-erf GELU: x * Phi(x).
Tensor gelu(const Tensor& v);
Tensor gelu_backward(const Tensor& v, const Tensor& grad_y);

// -sum_k p_k log p_hat_k. p_hat entries below 1e-300 where p_k > 0 are clamped
// to the floor; `floored` (when non-null) reports whether the clamp fired.
double cross_entropy(const Tensor& p_hat, const Tensor& p, bool* floored = nullptr);
Tensor cross_entropy_backward(const Tensor& p_hat, const Tensor& p);

// Central-difference gradient of a scalar function, the oracle every analytic
// backward rule in this project is checked against.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h = 1e-5);

}  // namespace sce
