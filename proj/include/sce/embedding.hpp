#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>

#include "sce/tensor.hpp"

namespace sce {

// Frozen external text-embedding function g(x) in R^{d_q}. Providers never
// receive gradients and must return the same vector for the same input.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Tensor embed(const std::string& text) const = 0;
  virtual std::size_t query_dim() const = 0;
};

// Deterministic bag-of-words stand-in: each lowercase word hashes to a fixed
// pseudo-random unit vector; the text embedding is the L2-normalized mean.
class HashedProvider : public EmbeddingProvider {
 public:
  HashedProvider(std::size_t dim, std::uint64_t seed);

  Tensor embed(const std::string& text) const override;
  std::size_t query_dim() const override { return dim_; }
  std::uint64_t seed() const { return seed_; }

  // Unit vector assigned to one word. The first min(d, d') coordinates of the
  // underlying gaussian stream coincide across dimensions for the same seed,
  // which is what ties a hashed label table to this provider.
  static Tensor word_vector(const std::string& word, std::size_t dim,
                            std::uint64_t seed);

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Serves vectors precomputed elsewhere (e.g. a real embedding model), looked
// up by text id. File format: header "dim=<d_q>", then one record per line:
// id, tab, d_q space-separated decimal floats.
class PrecomputedProvider : public EmbeddingProvider {
 public:
  static PrecomputedProvider load(const std::string& path, std::size_t expect_dim = 0);

  Tensor embed(const std::string& id) const override;
  std::size_t query_dim() const override { return dim_; }
  std::size_t size() const { return store_.size(); }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Tensor> store_;
};

}  // namespace sce
