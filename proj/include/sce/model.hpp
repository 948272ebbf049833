#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sce/embedding.hpp"
#include "sce/encoder.hpp"

namespace sce {

// Frozen token-embedding dictionary E plus the token <-> id maps.
struct LabelEmbeddingTable {
  std::unordered_map<std::string, std::size_t> vocab;
  std::vector<std::string> tokens;  // id -> token
  Tensor embeddings;                // V x d
  bool frozen = true;

  // Rows ~ normal(0, 0.02).
  static LabelEmbeddingTable random_init(const std::vector<std::string>& tokens,
                                         std::size_t dim, std::uint64_t seed);
  // Rows are the same seeded per-word unit vectors the hashed provider uses,
  // so label and query embeddings share one semantic space.
  static LabelEmbeddingTable hashed_init(const std::vector<std::string>& tokens,
                                         std::size_t dim, std::uint64_t seed);

  std::size_t size() const { return tokens.size(); }
  std::size_t dim() const { return embeddings.rank() == 2 ? embeddings.cols() : 0; }
  std::size_t id_of(const std::string& token) const;  // throws naming the token
};

// q' = W q + b, aligning the external embedding to the encoder width.
struct QueryAdaptor {
  Tensor w;  // d x d_q
  Tensor b;  // d

  static QueryAdaptor init(std::size_t dim, std::size_t query_dim, Rng& rng);
};

enum class ProviderKind : std::uint8_t { kHashed = 0, kPrecomputed = 1 };

struct SceParams {
  LabelEmbeddingTable table;
  QueryAdaptor adaptor;
  EncoderParams encoder;
  // Provider identity, recorded so checkpoints are self-contained.
  ProviderKind provider_kind = ProviderKind::kHashed;
  std::uint64_t provider_seed = 0;

  std::size_t dim() const { return encoder.config.dim; }
  std::size_t query_dim() const { return adaptor.w.cols(); }
  void validate() const;
};

struct PredictionDistribution {
  Tensor probs;              // aligned to the submitted label order
  Tensor scores;             // pre-softmax s_k
  std::size_t argmax_index;  // ties broken toward the lowest index
};

// Mean of the label's token embeddings. Tokens are
// vocabulary entries; unknown tokens raise an error naming the token.
Tensor embed_label(const std::vector<std::string>& label_tokens,
                   const LabelEmbeddingTable& table);

Tensor adapt_query(const Tensor& q, const QueryAdaptor& adaptor);

// Scores the label set against the query embedding: builds (q', h_1..h_K),
// encodes jointly, s_k = e_0 . e_k, probs = softmax(s). Labels are tokenized
// strings, pairwise distinct after tokenization.
PredictionDistribution forward_scores(const Tensor& q,
                                      const std::vector<std::string>& labels,
                                      const SceParams& params);

std::string predict(const std::string& text, const std::vector<std::string>& labels,
                    const SceParams& params, const EmbeddingProvider& provider);

// Cross-entropy of forward_scores against one-hot `gold`, with gradients for
// every trainable array accumulated into `grads` (a zeros_like mirror).
// E receives gradients only when the table is unfrozen.
double sce_loss_grad(const Tensor& q, const std::vector<std::string>& labels,
                     std::size_t gold, const SceParams& params, SceParams& grads,
                     PredictionDistribution* dist_out = nullptr);

SceParams zeros_like(const SceParams& params);

// Fixed checkpoint/array order: table.E, adaptor.W, adaptor.b, then encoder
// arrays layer by layer.
template <typename Params, typename F>
  requires requires(Params& p) { p.table; p.adaptor; p.encoder; }
void visit_arrays(Params& p, F&& f) {
  f(std::string("table.E"), p.table.embeddings);
  f(std::string("adaptor.W"), p.adaptor.w);
  f(std::string("adaptor.b"), p.adaptor.b);
  visit_arrays(p.encoder, f);
}

// Same order minus the frozen table.
template <typename Params, typename F>
void visit_trainable(Params& p, F&& f) {
  if (!p.table.frozen) f(std::string("table.E"), p.table.embeddings);
  f(std::string("adaptor.W"), p.adaptor.w);
  f(std::string("adaptor.b"), p.adaptor.b);
  visit_arrays(p.encoder, f);
}

// Versioned binary container (magic "SCE1"); see README for the exact layout.
// save -> load round-trips bit-exactly.
void save_checkpoint(const SceParams& params, const std::string& path);
SceParams load_checkpoint(const std::string& path);

}  // namespace sce
