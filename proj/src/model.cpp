#include "sce/model.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "sce/errors.hpp"
#include "sce/text.hpp"

namespace sce {

namespace {

std::unordered_map<std::string, std::size_t> make_vocab(
    const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::size_t> vocab;
  vocab.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!vocab.emplace(tokens[i], i).second)
      throw std::invalid_argument("duplicate vocabulary token: " + tokens[i]);
  }
  return vocab;
}

}  // namespace

LabelEmbeddingTable LabelEmbeddingTable::random_init(
    const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed) {
  if (tokens.empty()) throw std::invalid_argument("empty vocabulary");
  LabelEmbeddingTable t;
  t.tokens = tokens;
  t.vocab = make_vocab(tokens);
  t.embeddings = Tensor({tokens.size(), dim});
  Rng rng(seed);
  for (double& v : t.embeddings.data) v = 0.02 * rng.gaussian();
  return t;
}

LabelEmbeddingTable LabelEmbeddingTable::hashed_init(
    const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed) {
  if (tokens.empty()) throw std::invalid_argument("empty vocabulary");
  LabelEmbeddingTable t;
  t.tokens = tokens;
  t.vocab = make_vocab(tokens);
  t.embeddings = Tensor({tokens.size(), dim});
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Tensor v = HashedProvider::word_vector(tokens[i], dim, seed);
    for (std::size_t j = 0; j < dim; ++j) t.embeddings.at(i, j) = v[j];
  }
  return t;
}

std::size_t LabelEmbeddingTable::id_of(const std::string& token) const {
  auto it = vocab.find(token);
  if (it == vocab.end())
    throw std::invalid_argument("unknown label token: \"" + token + "\"");
  return it->second;
}

QueryAdaptor QueryAdaptor::init(std::size_t dim, std::size_t query_dim, Rng& rng) {
  if (dim < 1 || query_dim < 1)
    throw std::invalid_argument("adaptor dimensions must be positive");
  QueryAdaptor a;
  a.w = Tensor({dim, query_dim});
  for (double& v : a.w.data) v = 0.02 * rng.gaussian();
  // Near-identity start: the soft prompt passes the external embedding
  // through before training reshapes it.
  const std::size_t k = dim < query_dim ? dim : query_dim;
  for (std::size_t i = 0; i < k; ++i) a.w.at(i, i) += 1.0;
  a.b = Tensor({dim});
  return a;
}

void SceParams::validate() const {
  encoder.config.validate();
  if (table.dim() != encoder.config.dim)
    throw std::invalid_argument("label table width does not match encoder dim");
  if (adaptor.w.rank() != 2 || adaptor.w.rows() != encoder.config.dim)
    throw std::invalid_argument("adaptor output width does not match encoder dim");
  if (adaptor.b.numel() != encoder.config.dim)
    throw std::invalid_argument("adaptor bias width does not match encoder dim");
}

Tensor embed_label(const std::vector<std::string>& label_tokens,
                   const LabelEmbeddingTable& table) {
  if (label_tokens.empty())
    throw std::invalid_argument("label has no tokens");
  const std::size_t d = table.dim();
  Tensor h({d});
  for (const auto& tok : label_tokens) {
    const std::size_t id = table.id_of(tok);
    for (std::size_t j = 0; j < d; ++j) h[j] += table.embeddings.at(id, j);
  }
  const double inv = 1.0 / static_cast<double>(label_tokens.size());
  for (double& v : h.data) v *= inv;
  return h;
}

Tensor adapt_query(const Tensor& q, const QueryAdaptor& adaptor) {
  if (q.rank() != 1 || q.numel() != adaptor.w.cols())
    throw std::invalid_argument("query width does not match adaptor");
  Tensor out = matvec(adaptor.w, q);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += adaptor.b[i];
  return out;
}

namespace {

struct SceForward {
  std::vector<std::vector<std::size_t>> label_ids;
  Tensor seq;      // (K+1) x d
  std::vector<LayerCache> caches;
  Tensor enc_out;  // (K+1) x d
  PredictionDistribution dist;
};

SceForward run_forward(const Tensor& q, const std::vector<std::string>& labels,
                       const SceParams& params, bool with_cache) {
  params.validate();
  if (labels.empty()) throw std::domain_error("label set must not be empty");

  SceForward fwd;
  fwd.label_ids.reserve(labels.size());
  std::set<std::vector<std::size_t>> seen;
  for (const auto& label : labels) {
    auto toks = tokenize(label);
    if (toks.empty())
      throw std::invalid_argument("label tokenizes to nothing: \"" + label + "\"");
    std::vector<std::size_t> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(params.table.id_of(t));
    if (!seen.insert(ids).second)
      throw std::invalid_argument("duplicate label: \"" + label + "\"");
    fwd.label_ids.push_back(std::move(ids));
  }

  const std::size_t k = labels.size();
  const std::size_t d = params.dim();
  Tensor qp = adapt_query(q, params.adaptor);
  fwd.seq = Tensor({k + 1, d});
  for (std::size_t j = 0; j < d; ++j) fwd.seq.at(0, j) = qp[j];
  for (std::size_t i = 0; i < k; ++i) {
    const auto& ids = fwd.label_ids[i];
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t t : ids) acc += params.table.embeddings.at(t, j);
      fwd.seq.at(i + 1, j) = acc * inv;
    }
  }

  fwd.enc_out = encode(fwd.seq, params.encoder, with_cache ? &fwd.caches : nullptr);

  Tensor scores({k});
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      acc += fwd.enc_out.at(0, j) * fwd.enc_out.at(i + 1, j);
    scores[i] = acc;
  }
  Tensor probs = softmax(scores);
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (probs[i] > probs[best]) best = i;
  fwd.dist = PredictionDistribution{std::move(probs), std::move(scores), best};
  return fwd;
}

}  // namespace

PredictionDistribution forward_scores(const Tensor& q,
                                      const std::vector<std::string>& labels,
                                      const SceParams& params) {
  return run_forward(q, labels, params, false).dist;
}

std::string predict(const std::string& text, const std::vector<std::string>& labels,
                    const SceParams& params, const EmbeddingProvider& provider) {
  const Tensor q = provider.embed(text);
  const auto dist = forward_scores(q, labels, params);
  return labels[dist.argmax_index];
}

SceParams zeros_like(const SceParams& params) {
  SceParams g = params;
  visit_arrays(g, [](const std::string&, Tensor& t) {
    for (double& v : t.data) v = 0.0;
  });
  return g;
}

double sce_loss_grad(const Tensor& q, const std::vector<std::string>& labels,
                     std::size_t gold, const SceParams& params, SceParams& grads,
                     PredictionDistribution* dist_out) {
  if (gold >= labels.size())
    throw std::invalid_argument("gold index out of range");
  SceForward fwd = run_forward(q, labels, params, true);
  const std::size_t k = labels.size();
  const std::size_t d = params.dim();

  Tensor target({k});
  target[gold] = 1.0;
  const double loss = cross_entropy(fwd.dist.probs, target);

  Tensor dprobs = cross_entropy_backward(fwd.dist.probs, target);
  Tensor dscores = softmax_backward(fwd.dist.probs, dprobs);

  Tensor denc({k + 1, d});
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      denc.at(0, j) += dscores[i] * fwd.enc_out.at(i + 1, j);
      denc.at(i + 1, j) = dscores[i] * fwd.enc_out.at(0, j);
    }
  }

  Tensor dseq = encode_backward(denc, params.encoder, fwd.caches, grads.encoder);

  // Soft-prompt row feeds the adaptor: q' = W q + b.
  for (std::size_t i = 0; i < d; ++i) {
    const double dqp = dseq.at(0, i);
    grads.adaptor.b[i] += dqp;
    for (std::size_t j = 0; j < q.numel(); ++j)
      grads.adaptor.w.at(i, j) += dqp * q[j];
  }

  if (!params.table.frozen) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto& ids = fwd.label_ids[i];
      const double inv = 1.0 / static_cast<double>(ids.size());
      for (std::size_t t : ids)
        for (std::size_t j = 0; j < d; ++j)
          grads.table.embeddings.at(t, j) += dseq.at(i + 1, j) * inv;
    }
  }

  if (dist_out) *dist_out = fwd.dist;
  return loss;
}

// ---------------------------------------------------------------------------
// Checkpoint container. Little-endian throughout; arrays in visit order.

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw std::invalid_argument(path + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

constexpr char kMagic[4] = {'S', 'C', 'E', '1'};

}  // namespace

void save_checkpoint(const SceParams& params, const std::string& path) {
  params.validate();
  std::string out;
  out.append(kMagic, 4);
  const auto& cfg = params.encoder.config;
  put_u32(out, static_cast<std::uint32_t>(cfg.layers));
  put_u32(out, static_cast<std::uint32_t>(cfg.dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.heads));
  put_u32(out, static_cast<std::uint32_t>(cfg.head_dim));
  put_u32(out, static_cast<std::uint32_t>(cfg.ffn_dim));
  put_u32(out, static_cast<std::uint32_t>(params.query_dim()));
  put_u32(out, static_cast<std::uint32_t>(params.table.size()));
  out.push_back(params.table.frozen ? 1 : 0);
  out.push_back(static_cast<char>(params.provider_kind));
  put_u64(out, params.provider_seed);
  put_f64(out, cfg.ln_eps);
  for (const auto& tok : params.table.tokens) {
    put_u32(out, static_cast<std::uint32_t>(tok.size()));
    out.append(tok);
  }
  visit_arrays(params, [&out](const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) put_u64(out, d);
    for (double v : t.data) put_f64(out, v);
  });

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

SceParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path};

  if (r.bytes(4) != std::string(kMagic, 4))
    throw std::invalid_argument(path + ": not an SCE1 checkpoint");
  EncoderConfig cfg;
  cfg.layers = r.u32();
  cfg.dim = r.u32();
  cfg.heads = r.u32();
  cfg.head_dim = r.u32();
  cfg.ffn_dim = r.u32();
  const std::size_t d_q = r.u32();
  const std::size_t vocab_size = r.u32();
  const bool frozen = r.bytes(1)[0] != 0;
  const auto kind = static_cast<ProviderKind>(r.bytes(1)[0]);
  const std::uint64_t provider_seed = r.u64();
  cfg.ln_eps = r.f64();
  cfg.validate();

  SceParams p;
  p.provider_kind = kind;
  p.provider_seed = provider_seed;
  p.table.frozen = frozen;
  p.table.tokens.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    const std::size_t len = r.u32();
    p.table.tokens.push_back(r.bytes(len));
  }
  p.table.vocab = make_vocab(p.table.tokens);
  p.table.embeddings = Tensor({vocab_size, cfg.dim});
  p.adaptor.w = Tensor({cfg.dim, d_q});
  p.adaptor.b = Tensor({cfg.dim});
  p.encoder.config = cfg;
  p.encoder.layers.resize(cfg.layers);
  for (auto& l : p.encoder.layers) {
    l.wq = l.wk = l.wv = l.wo = Tensor({cfg.dim, cfg.dim});
    l.ln1_gain = l.ln1_bias = l.ln2_gain = l.ln2_bias = Tensor({cfg.dim});
    l.w1 = Tensor({cfg.dim, cfg.ffn_dim});
    l.b1 = Tensor({cfg.ffn_dim});
    l.w2 = Tensor({cfg.ffn_dim, cfg.dim});
    l.b2 = Tensor({cfg.dim});
  }

  visit_arrays(p, [&r, &path](const std::string& name, Tensor& t) {
    const std::size_t name_len = r.u32();
    const std::string stored = r.bytes(name_len);
    if (stored != name)
      throw std::invalid_argument(path + ": array order mismatch, expected \"" + name +
                                  "\" found \"" + stored + "\"");
    const std::size_t rank = r.u32();
    if (rank != t.rank())
      throw std::invalid_argument(path + ": rank mismatch for " + name);
    for (std::size_t i = 0; i < rank; ++i) {
      if (r.u64() != t.shape[i])
        throw std::invalid_argument(path + ": shape mismatch for " + name);
    }
    for (double& v : t.data) v = r.f64();
  });
  if (r.pos != buf.size())
    throw std::invalid_argument(path + ": trailing bytes after checkpoint payload");
  p.validate();
  return p;
}

}  // namespace sce
