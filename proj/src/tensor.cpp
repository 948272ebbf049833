#include "sce/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace sce {

namespace {

std::size_t numel_of(const std::vector<std::size_t>& s) {
  if (s.empty()) return 0;
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s)
    : shape(std::move(s)), data(numel_of(shape), 0.0) {}

Tensor::Tensor(std::initializer_list<std::size_t> s)
    : Tensor(std::vector<std::size_t>(s)) {}

Tensor Tensor::vec(std::initializer_list<double> values) {
  Tensor t({values.size()});
  std::size_t i = 0;
  for (double v : values) t.data[i++] = v;
  return t;
}

Tensor Tensor::mat(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = rows.begin()->size();
  Tensor t({r, c});
  std::size_t i = 0;
  for (const auto& row : rows) {
    require(row.size() == c, "ragged matrix initializer");
    for (double v : row) t.data[i++] = v;
  }
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul expects rank-2 tensors");
  require(a.cols() == b.rows(), "matmul inner dimensions disagree");
  const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
  Tensor out({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += a.at(i, t) * b.at(t, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out,
                     Tensor& grad_a, Tensor& grad_b) {
  require(grad_out.rank() == 2 && grad_out.rows() == a.rows() &&
              grad_out.cols() == b.cols(),
          "matmul_backward: grad_out shape mismatch");
  require(grad_a.same_shape(a) && grad_b.same_shape(b),
          "matmul_backward: gradient accumulator shape mismatch");
  const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
  // dA = dOut * B^T
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      double acc = 0.0;
      for (std::size_t j = 0; j < c; ++j) acc += grad_out.at(i, j) * b.at(t, j);
      grad_a.at(i, t) += acc;
    }
  // dB = A^T * dOut
  for (std::size_t t = 0; t < k; ++t)
    for (std::size_t j = 0; j < c; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < r; ++i) acc += a.at(i, t) * grad_out.at(i, j);
      grad_b.at(t, j) += acc;
    }
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  require(a.rank() == 2 && x.rank() == 1, "matvec expects matrix and vector");
  require(a.cols() == x.numel(), "matvec dimensions disagree");
  Tensor y({a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a.at(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Tensor softmax(const Tensor& v) {
  if (v.rank() != 1 || v.numel() == 0)
    throw std::domain_error("softmax expects a nonempty rank-1 tensor");
  const std::size_t n = v.numel();
  double mx = v[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  Tensor out({n});
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
  return out;
}

Tensor softmax_backward(const Tensor& y, const Tensor& grad_y) {
  require(y.same_shape(grad_y), "softmax_backward shape mismatch");
  const std::size_t n = y.numel();
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += grad_y[i] * y[i];
  Tensor grad({n});
  for (std::size_t i = 0; i < n; ++i) grad[i] = y[i] * (grad_y[i] - dot);
  return grad;
}

Tensor layer_norm(const Tensor& v, const Tensor& gain, const Tensor& bias,
                  double eps) {
  require(v.rank() == 1 && v.same_shape(gain) && v.same_shape(bias),
          "layer_norm shape mismatch");
  require(eps > 0.0, "layer_norm eps must be positive");
  const std::size_t n = v.numel();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += v[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + eps);
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i)
    out[i] = gain[i] * (v[i] - mean) * inv_std + bias[i];
  return out;
}

void layer_norm_backward(const Tensor& v, const Tensor& gain, double eps,
                         const Tensor& grad_out, Tensor& grad_v, Tensor& grad_gain,
                         Tensor& grad_bias) {
  const std::size_t n = v.numel();
  require(grad_out.numel() == n && grad_v.numel() == n && grad_gain.numel() == n &&
              grad_bias.numel() == n,
          "layer_norm_backward shape mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += v[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + eps);

  // dxhat, then the two projection terms of the population-variance rule.
  double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
  std::vector<double> xhat(n), dxhat(n);
  for (std::size_t i = 0; i < n; ++i) {
    xhat[i] = (v[i] - mean) * inv_std;
    dxhat[i] = grad_out[i] * gain[i];
    sum_dxhat += dxhat[i];
    sum_dxhat_xhat += dxhat[i] * xhat[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    grad_gain[i] += grad_out[i] * xhat[i];
    grad_bias[i] += grad_out[i];
    grad_v[i] += inv_std * (dxhat[i] - inv_n * sum_dxhat - xhat[i] * inv_n * sum_dxhat_xhat);
  }
}

namespace {
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}
}  // namespace

Tensor gelu(const Tensor& v) {
  Tensor out = v;
  for (double& x : out.data) x = x * normal_cdf(x);
  return out;
}

Tensor gelu_backward(const Tensor& v, const Tensor& grad_y) {
  require(v.same_shape(grad_y), "gelu_backward shape mismatch");
  Tensor grad = v;
  for (std::size_t i = 0; i < v.numel(); ++i) {
    const double x = v.data[i];
    grad.data[i] = grad_y.data[i] * (normal_cdf(x) + x * normal_pdf(x));
  }
  return grad;
}

double cross_entropy(const Tensor& p_hat, const Tensor& p, bool* floored) {
  require(p_hat.rank() == 1 && p_hat.same_shape(p), "cross_entropy shape mismatch");
  if (p_hat.numel() == 0) throw std::domain_error("cross_entropy on empty input");
  if (floored) *floored = false;
  double loss = 0.0;
  for (std::size_t i = 0; i < p.numel(); ++i) {
    if (p[i] == 0.0) continue;
    double q = p_hat[i];
    if (q < 1e-300) {
      q = 1e-300;
      if (floored) *floored = true;
    }
    loss -= p[i] * std::log(q);
  }
  return loss;
}

Tensor cross_entropy_backward(const Tensor& p_hat, const Tensor& p) {
  require(p_hat.same_shape(p), "cross_entropy_backward shape mismatch");
  Tensor grad({p.numel()});
  for (std::size_t i = 0; i < p.numel(); ++i) {
    if (p[i] == 0.0) continue;
    const double q = p_hat[i] < 1e-300 ? 1e-300 : p_hat[i];
    grad[i] = -p[i] / q;
  }
  return grad;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h) {
  require(h > 0.0, "finite_diff_grad step must be positive");
  Tensor grad(x.shape);
  Tensor probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double saved = probe.data[i];
    probe.data[i] = saved + h;
    const double fp = f(probe);
    probe.data[i] = saved - h;
    const double fm = f(probe);
    probe.data[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("finite_diff_grad: non-finite function value");
    grad.data[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace sce
