#include "sce/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sce/errors.hpp"

namespace sce {

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw std::invalid_argument("learning_rate must be >= 0");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (synonym_prob < 0.0 || synonym_prob > 1.0)
    throw std::invalid_argument("synonym_prob must be in [0, 1]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("adam betas must be in [0, 1)");
  if (adam_eps <= 0.0) throw std::invalid_argument("adam_eps must be positive");
}

TrainConfig TrainConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open training config: " + path);
  TrainConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    try {
      if (key == "learning_rate") cfg.learning_rate = std::stod(val);
      else if (key == "weight_decay") cfg.weight_decay = std::stod(val);
      else if (key == "beta1") cfg.beta1 = std::stod(val);
      else if (key == "beta2") cfg.beta2 = std::stod(val);
      else if (key == "adam_eps") cfg.adam_eps = std::stod(val);
      else if (key == "epochs") cfg.epochs = std::stoul(val);
      else if (key == "batch_size") cfg.batch_size = std::stoul(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "synonym_prob") cfg.synonym_prob = std::stod(val);
      else
        throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                    ": unknown key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": bad value for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

void ClassificationInstance::validate() const {
  if (labels.empty()) throw std::invalid_argument("instance has no labels");
  if (gold >= labels.size())
    throw std::invalid_argument("gold index " + std::to_string(gold) +
                                " out of range for " + std::to_string(labels.size()) +
                                " labels");
  std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() != labels.size())
    throw std::invalid_argument("instance labels are not pairwise distinct");
  for (const auto& [label, alts] : synonyms) {
    for (const auto& alt : alts) {
      if (alt == label)
        throw std::invalid_argument("synonym equals its own label: " + alt);
    }
  }
}

ClassificationInstance augment_synonym(const ClassificationInstance& inst,
                                       double synonym_prob, Rng& rng,
                                       std::size_t* skipped) {
  inst.validate();
  const std::string& gold_label = inst.labels[inst.gold];
  const auto preset = inst.synonyms.find(gold_label);
  if (preset == inst.synonyms.end() || preset->second.empty()) return inst;
  if (synonym_prob < 1.0 && rng.uniform() >= synonym_prob) return inst;

  // Uniform over the non-colliding part of the preset; equivalent to
  // resampling until a synonym misses the other candidates.
  std::vector<const std::string*> usable;
  for (const auto& alt : preset->second) {
    bool collides = false;
    for (std::size_t i = 0; i < inst.labels.size(); ++i)
      if (i != inst.gold && inst.labels[i] == alt) collides = true;
    if (!collides) usable.push_back(&alt);
  }
  if (usable.empty()) {
    if (skipped) ++*skipped;
    return inst;
  }
  ClassificationInstance out = inst;
  out.labels[inst.gold] = *usable[rng.below(usable.size())];
  return out;
}

AdamState AdamState::init(const SceParams& params) {
  return AdamState{zeros_like(params), zeros_like(params), 0};
}

namespace {

struct ArrayRefs {
  std::vector<std::string> names;
  std::vector<Tensor*> arrays;
};

ArrayRefs trainable_refs(SceParams& p) {
  ArrayRefs refs;
  visit_trainable(p, [&](const std::string& name, Tensor& t) {
    refs.names.push_back(name);
    refs.arrays.push_back(&t);
  });
  return refs;
}

void apply_adam(SceParams& params, SceParams& grads, AdamState& opt,
                const TrainConfig& cfg) {
  ++opt.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
  ArrayRefs p = trainable_refs(params);
  ArrayRefs g = trainable_refs(grads);
  ArrayRefs m = trainable_refs(opt.m);
  ArrayRefs v = trainable_refs(opt.v);
  for (std::size_t a = 0; a < p.arrays.size(); ++a) {
    // weight decay touches W, b, theta only, never the label table
    const bool decay = p.names[a] != "table.E";
    Tensor& pt = *p.arrays[a];
    Tensor& gt = *g.arrays[a];
    Tensor& mt = *m.arrays[a];
    Tensor& vt = *v.arrays[a];
    for (std::size_t i = 0; i < pt.numel(); ++i) {
      const double gi = gt.data[i];
      mt.data[i] = cfg.beta1 * mt.data[i] + (1.0 - cfg.beta1) * gi;
      vt.data[i] = cfg.beta2 * vt.data[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = mt.data[i] / bc1;
      const double vhat = vt.data[i] / bc2;
      double update = mhat / (std::sqrt(vhat) + cfg.adam_eps);
      if (decay) update += cfg.weight_decay * pt.data[i];
      pt.data[i] -= cfg.learning_rate * update;
    }
  }
}

}  // namespace

double train_step(const std::vector<ClassificationInstance>& batch, SceParams& params,
                  AdamState& opt, const TrainConfig& cfg,
                  const EmbeddingProvider& provider, std::size_t* correct_out) {
  cfg.validate();
  if (batch.empty()) throw std::invalid_argument("train_step on empty batch");

  SceParams grads = zeros_like(params);
  double loss_sum = 0.0;
  for (const auto& inst : batch) {
    inst.validate();
    const Tensor q = provider.embed(inst.text);
    PredictionDistribution dist;
    const double loss = sce_loss_grad(q, inst.labels, inst.gold, params, grads, &dist);
    if (!std::isfinite(loss))
      throw std::runtime_error("non-finite loss on instance with text: \"" + inst.text +
                               "\"");
    loss_sum += loss;
    if (correct_out && dist.argmax_index == inst.gold) ++*correct_out;
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  bool grads_finite = true;
  visit_trainable(grads, [&](const std::string&, Tensor& t) {
    for (double& x : t.data) {
      x *= scale;
      if (!std::isfinite(x)) grads_finite = false;
    }
  });
  if (!grads_finite)
    throw std::runtime_error("non-finite gradient in batch starting with text: \"" +
                             batch.front().text + "\"");
  apply_adam(params, grads, opt, cfg);
  return loss_sum * scale;
}

std::vector<EpochStats> train(const std::vector<ClassificationInstance>& dataset,
                              SceParams& params, const TrainConfig& cfg,
                              const EmbeddingProvider& provider) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");

  Rng rng(cfg.seed);
  AdamState opt = AdamState::init(params);
  std::vector<EpochStats> history;
  history.reserve(cfg.epochs);

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;

    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t take = std::min(cfg.batch_size, order.size() - pos);
      std::vector<ClassificationInstance> batch;
      batch.reserve(take);
      for (std::size_t i = 0; i < take; ++i)
        batch.push_back(augment_synonym(dataset[order[pos + i]], cfg.synonym_prob, rng));

      // Mirror of train_step, keeping the per-instance distributions so the
      // epoch accuracy comes from the same forward passes as the loss.
      SceParams grads = zeros_like(params);
      for (const auto& inst : batch) {
        const Tensor q = provider.embed(inst.text);
        PredictionDistribution dist;
        const double loss = sce_loss_grad(q, inst.labels, inst.gold, params, grads, &dist);
        if (!std::isfinite(loss))
          throw std::runtime_error("non-finite loss on instance with text: \"" +
                                   inst.text + "\"");
        loss_sum += loss;
        if (dist.argmax_index == inst.gold) ++correct;
      }
      const double scale = 1.0 / static_cast<double>(batch.size());
      visit_trainable(grads, [&](const std::string&, Tensor& t) {
        for (double& x : t.data) x *= scale;
      });
      apply_adam(params, grads, opt, cfg);
      pos += take;
    }

    history.push_back(EpochStats{epoch + 1,
                                 loss_sum / static_cast<double>(dataset.size()),
                                 static_cast<double>(correct) /
                                     static_cast<double>(dataset.size())});
  }
  return history;
}

GradCheckReport grad_check_model(const ClassificationInstance& inst, SceParams& params,
                                 const EmbeddingProvider& provider, double h) {
  inst.validate();
  if (h <= 0.0) throw std::invalid_argument("grad_check step must be positive");
  const Tensor q = provider.embed(inst.text);

  SceParams analytic = zeros_like(params);
  sce_loss_grad(q, inst.labels, inst.gold, params, analytic);

  // Forward-only loss for the probes, independent of the backward path.
  Tensor target({inst.labels.size()});
  target[inst.gold] = 1.0;
  const auto loss_at = [&]() {
    return cross_entropy(forward_scores(q, inst.labels, params).probs, target);
  };

  GradCheckReport report;
  report.h = h;
  ArrayRefs p = trainable_refs(params);
  ArrayRefs a = trainable_refs(analytic);
  for (std::size_t idx = 0; idx < p.arrays.size(); ++idx) {
    Tensor& array = *p.arrays[idx];
    const Tensor& grad = *a.arrays[idx];
    GradCheckEntry entry{p.names[idx], 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < array.numel(); ++i) {
      const double saved = array.data[i];
      array.data[i] = saved + h;
      const double fp = loss_at();
      array.data[i] = saved - h;
      const double fm = loss_at();
      array.data[i] = saved;

      const double numeric = (fp - fm) / (2.0 * h);
      const double an = grad.data[i];
      // Relative above the 1e-2 floor, absolute below it: central differences
      // carry ~1e-7 of truncation noise at h=1e-5, which would swamp a pure
      // relative metric on near-zero gradient entries.
      const double rel =
          std::abs(an - numeric) / std::max(1e-2, std::abs(an) + std::abs(numeric));
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      entry.max_abs_analytic = std::max(entry.max_abs_analytic, std::abs(an));
      entry.max_abs_numeric = std::max(entry.max_abs_numeric, std::abs(numeric));
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  report.degraded = report.max_rel_err > 1e-3;
  return report;
}

}  // namespace sce
