#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sce/rng.hpp"
#include "sce/tensor.hpp"

namespace sce {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t dim = 8;       // d
  std::size_t heads = 2;     // H
  std::size_t head_dim = 4;  // d_h, dim == heads * head_dim
  std::size_t ffn_dim = 16;  // d_ff
  double ln_eps = 1e-5;

  void validate() const;
};

// One transformer block's parameters. Attention projections carry no bias;
// the FFN does. There are deliberately no position-indexed arrays anywhere.
struct LayerParams {
  Tensor wq, wk, wv, wo;      // d x d
  Tensor ln1_gain, ln1_bias;  // d
  Tensor w1, b1;              // d x d_ff, d_ff
  Tensor w2, b2;              // d_ff x d, d
  Tensor ln2_gain, ln2_bias;  // d
};

struct EncoderParams {
  EncoderConfig config;
  std::vector<LayerParams> layers;

  // Weights ~ normal(0, 0.02), biases zero, layer-norm gains one.
  static EncoderParams init(const EncoderConfig& cfg, Rng& rng);
  static EncoderParams zeros_like(const EncoderParams& other);
};

// Enumerates every parameter array in the fixed checkpoint order.
template <typename Params, typename F>
  requires requires(Params& p) { p.config; p.layers; }
void visit_arrays(Params& p, F&& f) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string base = "layer" + std::to_string(i) + ".";
    f(base + "attn.wq", l.wq);
    f(base + "attn.wk", l.wk);
    f(base + "attn.wv", l.wv);
    f(base + "attn.wo", l.wo);
    f(base + "ln1.gain", l.ln1_gain);
    f(base + "ln1.bias", l.ln1_bias);
    f(base + "ffn.w1", l.w1);
    f(base + "ffn.b1", l.b1);
    f(base + "ffn.w2", l.w2);
    f(base + "ffn.b2", l.b2);
    f(base + "ln2.gain", l.ln2_gain);
    f(base + "ln2.bias", l.ln2_bias);
  }
}

// Forward intermediates one block needs for its backward pass.
struct LayerCache {
  Tensor input;              // n x d
  Tensor q, k, v;            // n x d
  std::vector<Tensor> probs; // per head, n x n attention weights
  Tensor concat;             // n x d, heads concatenated before wo
  Tensor r1;                 // input + attention output (pre ln1)
  Tensor y;                  // ln1 output
  Tensor u;                  // ffn pre-activation, n x d_ff
  Tensor g;                  // gelu(u)
  Tensor r2;                 // y + ffn output (pre ln2)
};

// Full bidirectional scaled dot-product attention, no mask, no positional
// terms, scale 1/sqrt(d_h). Accepts any sequence length >= 1.
Tensor self_attention(const Tensor& x, const LayerParams& lp,
                      const EncoderConfig& cfg, LayerCache* cache = nullptr);

// Rowwise contraction(gelu(expansion(x))).
Tensor ffn_block(const Tensor& x, const LayerParams& lp,
                 const EncoderConfig& cfg, LayerCache* cache = nullptr);

// L post-norm blocks: y = LN(x + Attn(x)); z = LN(y + FFN(y)).
// Sequence length must be >= 2 (soft prompt plus at least one label).
Tensor encode(const Tensor& seq, const EncoderParams& params,
              std::vector<LayerCache>* caches = nullptr);

// Backpropagates grad_out through the cached forward pass, accumulating
// parameter gradients into `grads` and returning dL/dseq.
Tensor encode_backward(const Tensor& grad_out, const EncoderParams& params,
                       const std::vector<LayerCache>& caches, EncoderParams& grads);

}  // namespace sce
