#include "sce/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace sce {

namespace {

Tensor transpose(const Tensor& m) {
  Tensor out({m.cols(), m.rows()});
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor slice_cols(const Tensor& m, std::size_t c0, std::size_t width) {
  Tensor out({m.rows(), width});
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < width; ++j) out.at(i, j) = m.at(i, c0 + j);
  return out;
}

void scatter_cols(Tensor& dst, const Tensor& src, std::size_t c0) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) dst.at(i, c0 + j) += src.at(i, j);
}

Tensor gaussian_matrix(std::size_t r, std::size_t c, double stddev, Rng& rng) {
  Tensor t({r, c});
  for (double& v : t.data) v = stddev * rng.gaussian();
  return t;
}

Tensor row(const Tensor& m, std::size_t i) {
  Tensor out({m.cols()});
  for (std::size_t j = 0; j < m.cols(); ++j) out[j] = m.at(i, j);
  return out;
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("encoder needs at least one layer");
  if (dim < 1 || heads < 1 || head_dim < 1 || ffn_dim < 1)
    throw std::invalid_argument("encoder dimensions must be positive");
  if (dim != heads * head_dim)
    throw std::invalid_argument("encoder dim must equal heads * head_dim");
  if (ln_eps <= 0.0) throw std::invalid_argument("layer-norm eps must be positive");
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderParams p;
  p.config = cfg;
  p.layers.resize(cfg.layers);
  for (auto& l : p.layers) {
    l.wq = gaussian_matrix(cfg.dim, cfg.dim, 0.02, rng);
    l.wk = gaussian_matrix(cfg.dim, cfg.dim, 0.02, rng);
    l.wv = gaussian_matrix(cfg.dim, cfg.dim, 0.02, rng);
    l.wo = gaussian_matrix(cfg.dim, cfg.dim, 0.02, rng);
    l.ln1_gain = Tensor({cfg.dim});
    l.ln1_bias = Tensor({cfg.dim});
    for (double& v : l.ln1_gain.data) v = 1.0;
    l.w1 = gaussian_matrix(cfg.dim, cfg.ffn_dim, 0.02, rng);
    l.b1 = Tensor({cfg.ffn_dim});
    l.w2 = gaussian_matrix(cfg.ffn_dim, cfg.dim, 0.02, rng);
    l.b2 = Tensor({cfg.dim});
    l.ln2_gain = Tensor({cfg.dim});
    l.ln2_bias = Tensor({cfg.dim});
    for (double& v : l.ln2_gain.data) v = 1.0;
  }
  return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& other) {
  EncoderParams p;
  p.config = other.config;
  p.layers.resize(other.layers.size());
  for (std::size_t i = 0; i < other.layers.size(); ++i) {
    const auto& src = other.layers[i];
    auto& dst = p.layers[i];
    dst.wq = Tensor(src.wq.shape);
    dst.wk = Tensor(src.wk.shape);
    dst.wv = Tensor(src.wv.shape);
    dst.wo = Tensor(src.wo.shape);
    dst.ln1_gain = Tensor(src.ln1_gain.shape);
    dst.ln1_bias = Tensor(src.ln1_bias.shape);
    dst.w1 = Tensor(src.w1.shape);
    dst.b1 = Tensor(src.b1.shape);
    dst.w2 = Tensor(src.w2.shape);
    dst.b2 = Tensor(src.b2.shape);
    dst.ln2_gain = Tensor(src.ln2_gain.shape);
    dst.ln2_bias = Tensor(src.ln2_bias.shape);
  }
  return p;
}

Tensor self_attention(const Tensor& x, const LayerParams& lp,
                      const EncoderConfig& cfg, LayerCache* cache) {
  if (x.rank() != 2 || x.cols() != cfg.dim)
    throw std::invalid_argument("self_attention: input must be n x dim");
  if (x.rows() < 1) throw std::invalid_argument("self_attention: empty sequence");
  const std::size_t n = x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));

  Tensor q = matmul(x, lp.wq);
  Tensor k = matmul(x, lp.wk);
  Tensor v = matmul(x, lp.wv);

  Tensor concat({n, cfg.dim});
  for (double& c : concat.data) c = 0.0;
  std::vector<Tensor> probs(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t c0 = h * cfg.head_dim;
    Tensor qh = slice_cols(q, c0, cfg.head_dim);
    Tensor kh = slice_cols(k, c0, cfg.head_dim);
    Tensor vh = slice_cols(v, c0, cfg.head_dim);
    Tensor scores = matmul(qh, transpose(kh));
    for (double& s : scores.data) s *= scale;
    Tensor a({n, n});
    for (std::size_t i = 0; i < n; ++i) {
      Tensor sm = softmax(row(scores, i));
      for (std::size_t j = 0; j < n; ++j) a.at(i, j) = sm[j];
    }
    Tensor oh = matmul(a, vh);
    scatter_cols(concat, oh, c0);
    probs[h] = std::move(a);
  }
  Tensor out = matmul(concat, lp.wo);

  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->concat = std::move(concat);
  }
  return out;
}

Tensor ffn_block(const Tensor& x, const LayerParams& lp, const EncoderConfig& cfg,
                 LayerCache* cache) {
  if (x.rank() != 2 || x.cols() != cfg.dim)
    throw std::invalid_argument("ffn_block: input must be n x dim");
  Tensor u = matmul(x, lp.w1);
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < u.cols(); ++j) u.at(i, j) += lp.b1[j];
  Tensor g = gelu(u);
  Tensor f = matmul(g, lp.w2);
  for (std::size_t i = 0; i < f.rows(); ++i)
    for (std::size_t j = 0; j < f.cols(); ++j) f.at(i, j) += lp.b2[j];
  if (cache) {
    cache->u = std::move(u);
    cache->g = std::move(g);
  }
  return f;
}

Tensor encode(const Tensor& seq, const EncoderParams& params,
              std::vector<LayerCache>* caches) {
  params.config.validate();
  if (seq.rank() != 2 || seq.cols() != params.config.dim)
    throw std::invalid_argument("encode: sequence must be n x dim");
  if (seq.rows() < 2)
    throw std::domain_error("encode: sequence needs the soft prompt plus at least one label");
  if (params.layers.size() != params.config.layers)
    throw std::invalid_argument("encode: layer count mismatch");

  if (caches) caches->assign(params.config.layers, LayerCache{});
  const std::size_t n = seq.rows();
  const auto& cfg = params.config;
  Tensor x = seq;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& lp = params.layers[li];
    LayerCache* cache = caches ? &(*caches)[li] : nullptr;
    Tensor attn = self_attention(x, lp, cfg, cache);
    Tensor r1({n, cfg.dim});
    for (std::size_t i = 0; i < r1.numel(); ++i) r1.data[i] = x.data[i] + attn.data[i];
    Tensor y({n, cfg.dim});
    for (std::size_t i = 0; i < n; ++i) {
      Tensor ln = layer_norm(row(r1, i), lp.ln1_gain, lp.ln1_bias, cfg.ln_eps);
      for (std::size_t j = 0; j < cfg.dim; ++j) y.at(i, j) = ln[j];
    }
    Tensor f = ffn_block(y, lp, cfg, cache);
    Tensor r2({n, cfg.dim});
    for (std::size_t i = 0; i < r2.numel(); ++i) r2.data[i] = y.data[i] + f.data[i];
    Tensor z({n, cfg.dim});
    for (std::size_t i = 0; i < n; ++i) {
      Tensor ln = layer_norm(row(r2, i), lp.ln2_gain, lp.ln2_bias, cfg.ln_eps);
      for (std::size_t j = 0; j < cfg.dim; ++j) z.at(i, j) = ln[j];
    }
    if (cache) {
      cache->r1 = std::move(r1);
      cache->y = y;
      cache->r2 = std::move(r2);
    }
    x = std::move(z);
  }
  return x;
}

Tensor encode_backward(const Tensor& grad_out, const EncoderParams& params,
                       const std::vector<LayerCache>& caches, EncoderParams& grads) {
  const auto& cfg = params.config;
  if (caches.size() != params.layers.size())
    throw std::invalid_argument("encode_backward: cache/layer count mismatch");
  const std::size_t n = grad_out.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim));

  Tensor dz = grad_out;
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& lp = params.layers[li];
    const auto& cache = caches[li];
    auto& gl = grads.layers[li];

    // z = LN2(r2)
    Tensor dr2({n, cfg.dim});
    for (std::size_t i = 0; i < n; ++i) {
      Tensor drow({cfg.dim}), dgain({cfg.dim}), dbias({cfg.dim});
      layer_norm_backward(row(cache.r2, i), lp.ln2_gain, cfg.ln_eps, row(dz, i),
                          drow, dgain, dbias);
      for (std::size_t j = 0; j < cfg.dim; ++j) {
        dr2.at(i, j) = drow[j];
        gl.ln2_gain[j] += dgain[j];
        gl.ln2_bias[j] += dbias[j];
      }
    }

    // r2 = y + f,  f = gelu(y w1 + b1) w2 + b2
    Tensor dy = dr2;
    Tensor dg(cache.g.shape);
    matmul_backward(cache.g, lp.w2, dr2, dg, gl.w2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < cfg.dim; ++j) gl.b2[j] += dr2.at(i, j);
    Tensor du = gelu_backward(cache.u, dg);
    matmul_backward(cache.y, lp.w1, du, dy, gl.w1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < cfg.ffn_dim; ++j) gl.b1[j] += du.at(i, j);

    // y = LN1(r1)
    Tensor dr1({n, cfg.dim});
    for (std::size_t i = 0; i < n; ++i) {
      Tensor drow({cfg.dim}), dgain({cfg.dim}), dbias({cfg.dim});
      layer_norm_backward(row(cache.r1, i), lp.ln1_gain, cfg.ln_eps, row(dy, i),
                          drow, dgain, dbias);
      for (std::size_t j = 0; j < cfg.dim; ++j) {
        dr1.at(i, j) = drow[j];
        gl.ln1_gain[j] += dgain[j];
        gl.ln1_bias[j] += dbias[j];
      }
    }

    // r1 = x + concat * wo
    Tensor dx = dr1;
    Tensor dconcat(cache.concat.shape);
    matmul_backward(cache.concat, lp.wo, dr1, dconcat, gl.wo);

    Tensor dq({n, cfg.dim}), dk({n, cfg.dim}), dv({n, cfg.dim});
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const std::size_t c0 = h * cfg.head_dim;
      Tensor qh = slice_cols(cache.q, c0, cfg.head_dim);
      Tensor kh = slice_cols(cache.k, c0, cfg.head_dim);
      Tensor vh = slice_cols(cache.v, c0, cfg.head_dim);
      Tensor doh = slice_cols(dconcat, c0, cfg.head_dim);
      const Tensor& a = cache.probs[h];

      Tensor da(a.shape), dvh(vh.shape);
      matmul_backward(a, vh, doh, da, dvh);

      Tensor ds(a.shape);
      for (std::size_t i = 0; i < n; ++i) {
        Tensor dsr = softmax_backward(row(a, i), row(da, i));
        for (std::size_t j = 0; j < n; ++j) ds.at(i, j) = dsr[j] * scale;
      }
      Tensor dqh(qh.shape), dkh_t({cfg.head_dim, n});
      Tensor kh_t = transpose(kh);
      matmul_backward(qh, kh_t, ds, dqh, dkh_t);
      Tensor dkh = transpose(dkh_t);

      scatter_cols(dq, dqh, c0);
      scatter_cols(dk, dkh, c0);
      scatter_cols(dv, dvh, c0);
    }

    matmul_backward(cache.input, lp.wq, dq, dx, gl.wq);
    matmul_backward(cache.input, lp.wk, dk, dx, gl.wk);
    matmul_backward(cache.input, lp.wv, dv, dx, gl.wv);
    dz = std::move(dx);
  }
  return dz;
}

}  // namespace sce
