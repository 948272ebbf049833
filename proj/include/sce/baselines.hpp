#pragma once

#include <string>
#include <vector>

#include "sce/model.hpp"
#include "sce/tensor.hpp"

namespace sce {

// Next-token logits over a decoder vocabulary plus the K candidate token ids.
struct LogitsView {
  Tensor logits;  // |V|
  std::vector<std::size_t> label_token_ids;

  void validate() const;
};

enum class SimilarityMode { kDot, kCosine };

// Independent text/label embedding comparison: s_k = z . l_k (dot) or the
// norm-corrected variant (cosine), softmaxed into a distribution. There is no
// cross-label computation, so the result is exactly permutation-equivariant.
PredictionDistribution cosine_classify(const Tensor& z,
                                       const std::vector<Tensor>& label_vecs,
                                       SimilarityMode mode);

// Softmax restricted to the candidate token positions of the logit vector.
PredictionDistribution llm_subset_softmax(const LogitsView& view);

// File format: header "vocab=<|V|>", a line of |V| floats, a line of K ids.
LogitsView load_logits_file(const std::string& path);

// The classification prompt shipped under assets/; {text_excerpt} and
// {categories} are the substitution points.
extern const char* const kPromptTemplate;

std::string render_prompt(const std::string& text,
                          const std::vector<std::string>& labels,
                          const std::string& template_text = kPromptTemplate);

}  // namespace sce
