#include "sce/flops.hpp"

#include <cmath>
#include <stdexcept>

namespace sce::flops {

std::string to_string(Int v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v)
                            : static_cast<unsigned __int128>(v);
  std::string digits;
  while (u > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) digits.push_back('-');
  return std::string(digits.rbegin(), digits.rend());
}

void ArchSpec::validate() const {
  if (layers < 1 || dim < 1 || ffn_dim < 1 || heads < 1 || head_dim < 1 ||
      n_f1 < 1 || n_f2 < 1)
    throw std::invalid_argument("architecture counts must be >= 1");
  if (dim != heads * head_dim)
    throw std::invalid_argument("dim must equal heads * head_dim");
  if (lora_rank && *lora_rank < 1)
    throw std::invalid_argument("lora rank must be >= 1 when present");
  if (ext_dim && *ext_dim < 1)
    throw std::invalid_argument("external embedding dim must be >= 1 when present");
}

namespace {

std::int64_t require_rank(const ArchSpec& spec) {
  if (!spec.lora_rank)
    throw std::invalid_argument("spec has no LoRA rank; use the standard formulas");
  return *spec.lora_rank;
}

void require_m(std::int64_t m) {
  if (m < 1) throw std::invalid_argument("token count m must be >= 1");
}

}  // namespace

std::vector<LineItem> block_line_items(const ArchSpec& spec, PassMode mode,
                                       bool forward) {
  spec.validate();
  const Int d = spec.dim, dff = spec.ffn_dim, nf = spec.n_f1 + spec.n_f2;
  std::vector<LineItem> items;
  if (mode == PassMode::kStandard) {
    if (forward) {
      items.push_back({"attention linear projections", {0, 4 * d * d, 0}});
      items.push_back({"attention computation", {0, 0, 2 * d}});
      items.push_back({"feed-forward", {0, d * dff * nf, 0}});
    } else {
      items.push_back({"attention linear projections", {0, 8 * d * d, 0}});
      items.push_back({"attention computation", {0, 0, 4 * d}});
      items.push_back({"feed-forward", {0, 2 * d * dff * nf, 0}});
    }
  } else {
    const Int r = require_rank(spec);
    if (forward) {
      items.push_back({"attention linear projections (lora)", {0, 4 * (d * d + 2 * d * r), 0}});
      items.push_back({"attention computation", {0, 0, 2 * d}});
      items.push_back({"feed-forward (lora)", {0, (d * dff + d * r + dff * r) * nf, 0}});
    } else {
      items.push_back({"attention linear projections (lora)", {0, 4 * (d * d + 4 * d * r), 0}});
      items.push_back({"attention computation", {0, 0, 4 * d}});
      items.push_back({"feed-forward (lora)", {0, (d * dff + 2 * d * r + 2 * dff * r) * nf, 0}});
    }
  }
  return items;
}

CostPoly fwd_block_poly(const ArchSpec& spec, PassMode mode) {
  CostPoly total;
  for (const auto& item : block_line_items(spec, mode, true)) total = total + item.poly;
  return total;
}

CostPoly bwd_block_poly(const ArchSpec& spec, PassMode mode) {
  CostPoly total;
  for (const auto& item : block_line_items(spec, mode, false)) total = total + item.poly;
  return total;
}

Int fwd_block_std(const ArchSpec& spec, std::int64_t m) {
  require_m(m);
  return fwd_block_poly(spec, PassMode::kStandard).eval(Int(m));
}

Int bwd_block_std(const ArchSpec& spec, std::int64_t m) {
  require_m(m);
  return bwd_block_poly(spec, PassMode::kStandard).eval(Int(m));
}

Int fwd_block_lora(const ArchSpec& spec, std::int64_t m) {
  require_m(m);
  return fwd_block_poly(spec, PassMode::kLora).eval(Int(m));
}

Int bwd_block_lora(const ArchSpec& spec, std::int64_t m) {
  require_m(m);
  return bwd_block_poly(spec, PassMode::kLora).eval(Int(m));
}

CostPoly train_model_poly(const ArchSpec& spec, PassMode mode) {
  CostPoly block = fwd_block_poly(spec, mode) + bwd_block_poly(spec, mode);
  CostPoly model = block.scaled(Int(spec.layers));
  if (spec.ext_dim) model.c0 += 3 * Int(spec.dim) * Int(*spec.ext_dim);
  return model;
}

Int train_flops_model(const ArchSpec& spec, std::int64_t m, PassMode mode) {
  require_m(m);
  return train_model_poly(spec, mode).eval(Int(m));
}

CostPoly infer_model_poly(const ArchSpec& spec) {
  return fwd_block_poly(spec, PassMode::kStandard).scaled(Int(spec.layers));
}

Int infer_flops_model(const ArchSpec& spec, std::int64_t m) {
  require_m(m);
  return infer_model_poly(spec).eval(Int(m));
}

Int epoch_cost(const ArchSpec& spec, double m, std::int64_t n, EpochMode mode) {
  if (n < 1) throw std::invalid_argument("sample count N must be >= 1");
  if (!(m >= 1.0)) throw std::invalid_argument("token count m must be >= 1");
  CostPoly model;
  switch (mode) {
    case EpochMode::kTrainStandard:
      model = train_model_poly(spec, PassMode::kStandard);
      break;
    case EpochMode::kTrainLora:
      model = train_model_poly(spec, PassMode::kLora);
      break;
    case EpochMode::kInfer:
      model = infer_model_poly(spec);
      break;
  }
  if (m == std::floor(m) && m <= 9.0e15) {
    return Int(n) * model.eval(Int(static_cast<std::int64_t>(m)));
  }
  // Fractional token averages: 80-bit long double keeps these totals
  // (~1e16) well inside the exact-integer range.
  const long double total = static_cast<long double>(n) * model.eval(static_cast<long double>(m));
  return static_cast<Int>(llroundl(total));
}

AmortizationReport amortization_report(Int sce_epoch, Int embed_oneoff,
                                       Int llama_epoch, std::size_t epochs) {
  if (sce_epoch <= 0 || embed_oneoff <= 0 || llama_epoch <= 0)
    throw std::invalid_argument("amortization inputs must be positive");
  const long double sce = static_cast<long double>(sce_epoch);
  const long double oneoff = static_cast<long double>(embed_oneoff);
  const long double llama = static_cast<long double>(llama_epoch);
  AmortizationReport report;
  report.per_epoch_ratio = static_cast<double>(sce / llama);
  report.upper_bound_ratio = static_cast<double>((sce + oneoff) / llama);
  report.cumulative.reserve(epochs);
  for (std::size_t e = 1; e <= epochs; ++e) {
    const long double le = static_cast<long double>(e);
    report.cumulative.push_back(static_cast<double>((le * sce + oneoff) / (le * llama)));
  }
  return report;
}

std::optional<ArchSpec> preset(const std::string& name) {
  ArchSpec s;
  if (name == "roberta-base") {
    s.layers = 12; s.dim = 768; s.ffn_dim = 3072; s.heads = 12; s.head_dim = 64;
    s.n_f1 = 1; s.n_f2 = 1;
  } else if (name == "roberta-sce") {
    s.layers = 12; s.dim = 768; s.ffn_dim = 3072; s.heads = 12; s.head_dim = 64;
    s.n_f1 = 1; s.n_f2 = 1; s.ext_dim = 1024;
  } else if (name == "jina-v3") {
    s.layers = 24; s.dim = 1024; s.ffn_dim = 4096; s.heads = 16; s.head_dim = 64;
    s.n_f1 = 1; s.n_f2 = 1;
  } else if (name == "llama-3.2-1b-lora-r180") {
    s.layers = 16; s.dim = 2048; s.ffn_dim = 8192; s.heads = 32; s.head_dim = 64;
    s.n_f1 = 2; s.n_f2 = 1; s.lora_rank = 180;
  } else if (name == "qwen3-1.7b") {
    s.layers = 28; s.dim = 2048; s.ffn_dim = 6144; s.heads = 16; s.head_dim = 128;
    s.n_f1 = 2; s.n_f2 = 1;
  } else {
    return std::nullopt;
  }
  s.validate();
  return s;
}

std::vector<std::string> preset_names() {
  return {"roberta-base", "roberta-sce", "jina-v3", "llama-3.2-1b-lora-r180",
          "qwen3-1.7b"};
}

}  // namespace sce::flops
