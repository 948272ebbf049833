#include "sce/baselines.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sce/errors.hpp"

namespace sce {

void LogitsView::validate() const {
  if (logits.rank() != 1 || logits.numel() == 0)
    throw std::invalid_argument("logits must be a nonempty vector");
  if (label_token_ids.empty())
    throw std::domain_error("label token id list must not be empty");
  std::set<std::size_t> seen;
  for (std::size_t id : label_token_ids) {
    if (id >= logits.numel())
      throw std::invalid_argument("label token id " + std::to_string(id) +
                                  " out of vocabulary range");
    if (!seen.insert(id).second)
      throw std::invalid_argument("duplicate label token id " + std::to_string(id));
  }
}

namespace {

PredictionDistribution to_distribution(Tensor scores) {
  Tensor probs = softmax(scores);
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.numel(); ++i)
    if (probs[i] > probs[best]) best = i;
  return PredictionDistribution{std::move(probs), std::move(scores), best};
}

}  // namespace

PredictionDistribution cosine_classify(const Tensor& z,
                                       const std::vector<Tensor>& label_vecs,
                                       SimilarityMode mode) {
  if (z.rank() != 1 || z.numel() == 0)
    throw std::invalid_argument("text embedding must be a nonempty vector");
  if (label_vecs.empty()) throw std::domain_error("label set must not be empty");

  double z_norm = 0.0;
  for (double v : z.data) z_norm += v * v;
  z_norm = std::sqrt(z_norm);
  if (mode == SimilarityMode::kCosine && z_norm == 0.0)
    throw std::invalid_argument("degenerate zero text embedding in cosine mode");

  Tensor scores({label_vecs.size()});
  for (std::size_t k = 0; k < label_vecs.size(); ++k) {
    const Tensor& l = label_vecs[k];
    if (!l.same_shape(z))
      throw std::invalid_argument("label vector " + std::to_string(k) +
                                  " width mismatch");
    double dot = 0.0, l_norm = 0.0;
    for (std::size_t i = 0; i < z.numel(); ++i) {
      dot += z[i] * l[i];
      l_norm += l[i] * l[i];
    }
    if (mode == SimilarityMode::kDot) {
      scores[k] = dot;
    } else {
      l_norm = std::sqrt(l_norm);
      if (l_norm == 0.0)
        throw std::invalid_argument("degenerate zero label vector " +
                                    std::to_string(k) + " in cosine mode");
      scores[k] = dot / (z_norm * l_norm);
    }
  }
  return to_distribution(std::move(scores));
}

PredictionDistribution llm_subset_softmax(const LogitsView& view) {
  view.validate();
  Tensor scores({view.label_token_ids.size()});
  for (std::size_t k = 0; k < view.label_token_ids.size(); ++k)
    scores[k] = view.logits[view.label_token_ids[k]];
  return to_distribution(std::move(scores));
}

LogitsView load_logits_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open logits file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("vocab=", 0) != 0)
    throw std::invalid_argument(path + ":1: expected header \"vocab=<|V|>\"");
  const std::size_t vocab = std::stoul(line.substr(6));
  if (vocab == 0) throw std::invalid_argument(path + ":1: vocab size must be positive");

  LogitsView view;
  view.logits = Tensor({vocab});
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ":2: missing logits line");
  {
    std::istringstream vals(line);
    std::size_t count = 0;
    double x;
    while (vals >> x) {
      if (count < vocab) view.logits[count] = x;
      ++count;
    }
    if (count != vocab)
      throw std::invalid_argument(path + ":2: expected " + std::to_string(vocab) +
                                  " logits, got " + std::to_string(count));
  }
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ":3: missing label token id line");
  {
    std::istringstream vals(line);
    long long id;
    while (vals >> id) {
      if (id < 0)
        throw std::invalid_argument(path + ":3: negative token id");
      view.label_token_ids.push_back(static_cast<std::size_t>(id));
    }
  }
  view.validate();
  return view;
}

const char* const kPromptTemplate =
    "You are given a text excerpt and a list of categories.\n"
    "Your task is to select the best category from the list of categories to "
    "classify the given text excerpt.\n"
    "\n"
    "### Note:\n"
    "Your selected category for the text excerpt must match exactly -case, "
    "plural/singular, and spelling-with one of the options in the CATEGORIES "
    "list. Use the category string exactly as it appears in CATEGORIES.\n"
    "\n"
    "## TEXT_EXCERPT:\n"
    "{text_excerpt}\n"
    "\n"
    "## CATEGORIES:\n"
    "{categories}\n"
    "\n"
    "## SCHEMA:\n"
    "SelectedCategory\n"
    "\n"
    "### Note: Your output must strictly be a single token which is the "
    "category selected from the list of categories. Do not give verbose "
    "reasonings giving explanations around it. Do not give python reasoning. "
    "Just a single token output. Now generate the output.\n";

std::string render_prompt(const std::string& text,
                          const std::vector<std::string>& labels,
                          const std::string& template_text) {
  std::string categories;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) categories += ", ";
    categories += labels[i];
  }
  std::string out = template_text;
  const auto sub = [&out](const std::string& key, const std::string& value) {
    const auto pos = out.find(key);
    if (pos == std::string::npos)
      throw std::invalid_argument("prompt template missing placeholder " + key);
    out.replace(pos, key.size(), value);
  };
  sub("{text_excerpt}", text);
  sub("{categories}", categories);
  return out;
}

}  // namespace sce
