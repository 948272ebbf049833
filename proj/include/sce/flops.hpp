#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sce::flops {

// One FLOP = one multiply + one add (the fused-MAC convention). Every count
// in this module halves if you prefer the 2-ops-per-MAC convention.
using Int = __int128;

std::string to_string(Int v);

// Architectural constants driving the cost model.
struct ArchSpec {
  std::int64_t layers = 1;    // L
  std::int64_t dim = 1;       // d
  std::int64_t ffn_dim = 1;   // d_ff
  std::int64_t heads = 1;     // H
  std::int64_t head_dim = 1;  // d_h, dim == heads * head_dim
  std::int64_t n_f1 = 1;      // expansion layers in the FFN
  std::int64_t n_f2 = 1;      // contraction layers in the FFN
  std::optional<std::int64_t> lora_rank;  // r
  std::optional<std::int64_t> ext_dim;    // d_ext, adds the 3*d*d_ext adaptor term

  void validate() const;
};

// Cost as a polynomial in the token count m: c0 + c1*m + c2*m^2. Exact
// integer coefficients, so preset totals compare by equality.
struct CostPoly {
  Int c0 = 0, c1 = 0, c2 = 0;

  Int eval(Int m) const { return c0 + c1 * m + c2 * m * m; }
  long double eval(long double m) const {
    return static_cast<long double>(c0) + static_cast<long double>(c1) * m +
           static_cast<long double>(c2) * m * m;
  }
  CostPoly operator+(const CostPoly& o) const { return {c0 + o.c0, c1 + o.c1, c2 + o.c2}; }
  CostPoly scaled(Int f) const { return {c0 * f, c1 * f, c2 * f}; }
};

enum class PassMode { kStandard, kLora };

struct LineItem {
  std::string name;
  CostPoly poly;
};

// Per-block polynomials. Softmax/layer-norm/bias costs are excluded.
CostPoly fwd_block_poly(const ArchSpec& spec, PassMode mode);
CostPoly bwd_block_poly(const ArchSpec& spec, PassMode mode);
// Component rows (attention projections, attention computation, FFN).
std::vector<LineItem> block_line_items(const ArchSpec& spec, PassMode mode, bool forward);

// Point evaluations; m must be >= 1.
Int fwd_block_std(const ArchSpec& spec, std::int64_t m);
Int bwd_block_std(const ArchSpec& spec, std::int64_t m);
Int fwd_block_lora(const ArchSpec& spec, std::int64_t m);
Int bwd_block_lora(const ArchSpec& spec, std::int64_t m);

// Per-sample training cost: L * (fwd + bwd per block), plus 3*d*d_ext once
// when an external-embedding adaptor is configured.
CostPoly train_model_poly(const ArchSpec& spec, PassMode mode);
Int train_flops_model(const ArchSpec& spec, std::int64_t m, PassMode mode);

// Per-sample inference cost: L * forward block (standard).
CostPoly infer_model_poly(const ArchSpec& spec);
Int infer_flops_model(const ArchSpec& spec, std::int64_t m);

enum class EpochMode { kTrainStandard, kTrainLora, kInfer };

// N * per-sample model cost. Fractional m is allowed here only (token-count
// averages); integral m takes the exact integer path.
Int epoch_cost(const ArchSpec& spec, double m, std::int64_t n, EpochMode mode);

struct AmortizationReport {
  double per_epoch_ratio;          // sce_epoch / llama_epoch
  double upper_bound_ratio;        // cumulative ratio at one epoch
  std::vector<double> cumulative;  // cumulative ratio after 1..epochs epochs
};

// How the one-off external-embedding cost amortizes against per-epoch costs.
AmortizationReport amortization_report(Int sce_epoch, Int embed_oneoff,
                                       Int llama_epoch, std::size_t epochs);

// Shipped presets: roberta-base, roberta-sce (d_ext=1024), jina-v3,
// llama-3.2-1b-lora-r180, qwen3-1.7b.
std::optional<ArchSpec> preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace sce::flops
