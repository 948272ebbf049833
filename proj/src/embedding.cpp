#include "sce/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sce/errors.hpp"
#include "sce/rng.hpp"
#include "sce/text.hpp"

namespace sce {

HashedProvider::HashedProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 1) throw std::invalid_argument("provider dimension must be positive");
}

Tensor HashedProvider::word_vector(const std::string& word, std::size_t dim,
                                   std::uint64_t seed) {
  Rng rng(hash64(word, seed));
  Tensor v({dim});
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    v[i] = rng.gaussian();
    norm_sq += v[i] * v[i];
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v.data) x *= inv;
  return v;
}

Tensor HashedProvider::embed(const std::string& text) const {
  const auto words = tokenize(text);
  if (words.empty())
    throw std::invalid_argument("cannot embed empty or whitespace-only text");
  Tensor acc({dim_});
  for (const auto& w : words) {
    Tensor v = word_vector(w, dim_, seed_);
    for (std::size_t i = 0; i < dim_; ++i) acc[i] += v[i];
  }
  const double inv_count = 1.0 / static_cast<double>(words.size());
  double norm_sq = 0.0;
  for (double& x : acc.data) {
    x *= inv_count;
    norm_sq += x * x;
  }
  if (norm_sq == 0.0)
    throw std::invalid_argument("degenerate text embedding (zero vector)");
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : acc.data) x *= inv;
  return acc;
}

PrecomputedProvider PrecomputedProvider::load(const std::string& path,
                                              std::size_t expect_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  PrecomputedProvider p;
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ": missing header line");
  if (line.rfind("dim=", 0) != 0)
    throw std::invalid_argument(path + ":1: expected header \"dim=<d_q>\"");
  p.dim_ = static_cast<std::size_t>(std::stoul(line.substr(4)));
  if (p.dim_ < 1) throw std::invalid_argument(path + ":1: dimension must be positive");
  if (expect_dim != 0 && p.dim_ != expect_dim)
    throw std::invalid_argument(path + ": dimension " + std::to_string(p.dim_) +
                                " does not match expected " + std::to_string(expect_dim));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected \"id<TAB>values\"");
    const std::string id = line.substr(0, tab);
    std::istringstream vals(line.substr(tab + 1));
    Tensor v({p.dim_});
    std::size_t count = 0;
    double x;
    while (vals >> x) {
      if (count < p.dim_) v[count] = x;
      ++count;
    }
    if (count != p.dim_)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(p.dim_) + " values, got " +
                                  std::to_string(count));
    p.store_[id] = std::move(v);
  }
  return p;
}

Tensor PrecomputedProvider::embed(const std::string& id) const {
  auto it = store_.find(id);
  if (it == store_.end())
    throw std::invalid_argument("no precomputed embedding for id: " + id);
  return it->second;
}

}  // namespace sce
