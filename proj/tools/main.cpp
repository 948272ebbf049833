#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sce/baselines.hpp"
#include "sce/data.hpp"
#include "sce/errors.hpp"
#include "sce/flops.hpp"
#include "sce/model.hpp"
#include "sce/train.hpp"

using nlohmann::ordered_json;

namespace {

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string format_fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::string format_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data, out, history, config;
  std::vector<std::string> vocab_from;
  std::size_t layers = 2, dim = 32, heads = 4, ffn_dim = 64, query_dim = 32;
  std::string table_kind = "random";
  bool unfreeze_table = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr, synonym_prob, weight_decay;
};

int run_train(const TrainOpts& opt) {
  sce::TrainConfig cfg;
  if (!opt.config.empty()) cfg = sce::TrainConfig::from_file(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.epochs) cfg.epochs = *opt.epochs;
  if (opt.batch_size) cfg.batch_size = *opt.batch_size;
  if (opt.lr) cfg.learning_rate = *opt.lr;
  if (opt.synonym_prob) cfg.synonym_prob = *opt.synonym_prob;
  if (opt.weight_decay) cfg.weight_decay = *opt.weight_decay;
  cfg.validate();

  const auto dataset = sce::load_jsonl(opt.data);
  auto vocab_corpus = dataset;
  for (const auto& extra : opt.vocab_from)
    for (auto& inst : sce::load_jsonl(extra)) vocab_corpus.push_back(std::move(inst));
  const sce::Vocabulary vocab = sce::build_vocab(vocab_corpus);

  sce::EncoderConfig ecfg;
  ecfg.layers = opt.layers;
  ecfg.dim = opt.dim;
  ecfg.heads = opt.heads;
  if (opt.dim % opt.heads != 0)
    throw std::invalid_argument("--dim must be divisible by --heads");
  ecfg.head_dim = opt.dim / opt.heads;
  ecfg.ffn_dim = opt.ffn_dim;

  sce::Rng rng(cfg.seed);
  sce::SceParams params;
  params.encoder = sce::EncoderParams::init(ecfg, rng);
  if (opt.table_kind == "hashed")
    params.table = sce::LabelEmbeddingTable::hashed_init(vocab.id_to_token, opt.dim, cfg.seed);
  else if (opt.table_kind == "random")
    params.table = sce::LabelEmbeddingTable::random_init(vocab.id_to_token, opt.dim, cfg.seed);
  else
    throw std::invalid_argument("--table must be hashed or random");
  params.table.frozen = !opt.unfreeze_table;
  params.adaptor = sce::QueryAdaptor::init(opt.dim, opt.query_dim, rng);
  params.provider_kind = sce::ProviderKind::kHashed;
  params.provider_seed = cfg.seed;

  const sce::HashedProvider provider(opt.query_dim, params.provider_seed);
  const auto history = sce::train(dataset, params, cfg, provider);

  std::ofstream hist_out;
  if (!opt.history.empty()) {
    hist_out.open(opt.history, std::ios::binary);
    if (!hist_out) throw sce::IoError("cannot open history file: " + opt.history);
  }
  for (const auto& e : history) {
    ordered_json j;
    j["epoch"] = e.epoch;
    j["loss"] = e.loss;
    j["acc"] = e.accuracy;
    const std::string line = j.dump();
    std::printf("%s\n", line.c_str());
    if (hist_out) hist_out << line << '\n';
  }
  sce::save_checkpoint(params, opt.out);
  std::fprintf(stderr, "saved checkpoint: %s (V=%zu, trained on %zu instances)\n",
               opt.out.c_str(), params.table.size(), dataset.size());
  return 0;
}

// ---------------------------------------------------------------------------
// eval / classify

std::unique_ptr<sce::EmbeddingProvider> provider_for(const sce::SceParams& params,
                                                     const std::string& embeddings) {
  if (!embeddings.empty())
    return std::make_unique<sce::PrecomputedProvider>(
        sce::PrecomputedProvider::load(embeddings, params.query_dim()));
  if (params.provider_kind == sce::ProviderKind::kPrecomputed)
    throw std::invalid_argument(
        "checkpoint was trained with precomputed embeddings; pass --embeddings");
  return std::make_unique<sce::HashedProvider>(params.query_dim(), params.provider_seed);
}

int run_eval(const std::string& checkpoint, const std::string& data,
             const std::string& embeddings, bool json) {
  const sce::SceParams params = sce::load_checkpoint(checkpoint);
  const auto provider = provider_for(params, embeddings);
  const auto dataset = sce::load_jsonl(data);
  if (dataset.empty()) throw std::invalid_argument("dataset is empty: " + data);

  std::size_t correct = 0;
  for (const auto& inst : dataset) {
    const std::string winner = sce::predict(inst.text, inst.labels, params, *provider);
    if (winner == inst.labels[inst.gold]) ++correct;
  }
  const double pct = 100.0 * static_cast<double>(correct) / static_cast<double>(dataset.size());
  if (json) {
    ordered_json j;
    j["accuracy"] = format_fixed(pct, 2);
    j["correct"] = correct;
    j["total"] = dataset.size();
    std::printf("%s\n", j.dump().c_str());
  } else {
    std::printf("%s\n", format_fixed(pct, 2).c_str());
  }
  return 0;
}

int run_classify(const std::string& checkpoint, const std::string& text,
                 const std::string& labels_csv, const std::string& embeddings,
                 bool json) {
  const sce::SceParams params = sce::load_checkpoint(checkpoint);
  const auto provider = provider_for(params, embeddings);
  const auto labels = split_csv(labels_csv);
  if (labels.empty()) throw std::invalid_argument("--labels must name at least one label");

  const sce::Tensor q = provider->embed(text);
  const auto dist = sce::forward_scores(q, labels, params);
  if (json) {
    ordered_json j;
    j["label"] = labels[dist.argmax_index];
    ordered_json probs = ordered_json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) probs[labels[i]] = dist.probs[i];
    j["probs"] = probs;
    std::printf("%s\n", j.dump().c_str());
  } else {
    std::printf("%s\n", labels[dist.argmax_index].c_str());
    for (std::size_t i = 0; i < labels.size(); ++i)
      std::printf("%s\t%.6f\n", labels[i].c_str(), dist.probs[i]);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// flops

struct FlopsOpts {
  std::string preset;
  std::int64_t layers = 1, dim = 0, ffn_dim = 0, heads = 1, head_dim = 0;
  std::int64_t n_f1 = 1, n_f2 = 1;
  std::int64_t rank = 0, ext_dim = 0;
  double m = 1.0;
  std::int64_t n = 1;
  std::string mode = "block";
  std::string variant = "auto";
  bool json = false;
  // amortize inputs
  std::string llama_preset = "llama-3.2-1b-lora-r180";
  std::string sce_preset = "roberta-sce";
  std::string embed_preset = "jina-v3";
  double m_llama = 225.0, m_sce = 11.0, m_embed = 84.17;
  std::size_t epochs = 10;
};

sce::flops::ArchSpec spec_from(const FlopsOpts& opt) {
  if (!opt.preset.empty()) {
    const auto s = sce::flops::preset(opt.preset);
    if (!s) throw std::invalid_argument("unknown preset: " + opt.preset +
                                        " (try: roberta-base, roberta-sce, jina-v3, "
                                        "llama-3.2-1b-lora-r180, qwen3-1.7b)");
    return *s;
  }
  sce::flops::ArchSpec s;
  s.layers = opt.layers;
  s.dim = opt.dim;
  s.ffn_dim = opt.ffn_dim;
  s.heads = opt.heads;
  s.head_dim = opt.head_dim ? opt.head_dim : (opt.heads ? opt.dim / opt.heads : 0);
  s.n_f1 = opt.n_f1;
  s.n_f2 = opt.n_f2;
  if (opt.rank > 0) s.lora_rank = opt.rank;
  if (opt.ext_dim > 0) s.ext_dim = opt.ext_dim;
  s.validate();
  return s;
}

std::int64_t integral_m(double m) {
  if (m != std::floor(m))
    throw std::invalid_argument("this mode requires an integral token count m");
  return static_cast<std::int64_t>(m);
}

int run_flops(const FlopsOpts& opt) {
  using namespace sce::flops;

  if (opt.mode == "amortize") {
    const auto llama = preset(opt.llama_preset);
    const auto sce_s = preset(opt.sce_preset);
    const auto embed = preset(opt.embed_preset);
    if (!llama || !sce_s || !embed)
      throw std::invalid_argument("amortize mode needs valid presets");
    const Int llama_epoch = epoch_cost(*llama, opt.m_llama, opt.n,
                                       llama->lora_rank ? EpochMode::kTrainLora
                                                        : EpochMode::kTrainStandard);
    const Int sce_epoch = epoch_cost(*sce_s, opt.m_sce, opt.n, EpochMode::kTrainStandard);
    const Int oneoff = epoch_cost(*embed, opt.m_embed, opt.n, EpochMode::kInfer);
    const auto report = amortization_report(sce_epoch, oneoff, llama_epoch, opt.epochs);
    if (opt.json) {
      ordered_json j;
      j["llama_epoch_flops"] = to_string(llama_epoch);
      j["sce_epoch_flops"] = to_string(sce_epoch);
      j["embed_oneoff_flops"] = to_string(oneoff);
      j["per_epoch_ratio"] = report.per_epoch_ratio;
      j["upper_bound_ratio_epoch1"] = report.upper_bound_ratio;
      j["cumulative_ratio"] = report.cumulative;
      std::printf("%s\n", j.dump().c_str());
    } else {
      std::printf("%-28s %s\n", "llama epoch flops", to_string(llama_epoch).c_str());
      std::printf("%-28s %s\n", "sce epoch flops", to_string(sce_epoch).c_str());
      std::printf("%-28s %s\n", "embedding one-off flops", to_string(oneoff).c_str());
      std::printf("%-28s %.6f\n", "per-epoch ratio", report.per_epoch_ratio);
      std::printf("%-28s %.6f\n", "upper bound (1 epoch)", report.upper_bound_ratio);
      for (std::size_t e = 0; e < report.cumulative.size(); ++e)
        std::printf("cumulative ratio, epoch %-4zu %.6f\n", e + 1, report.cumulative[e]);
    }
    return 0;
  }

  const ArchSpec spec = spec_from(opt);
  PassMode pass = PassMode::kStandard;
  if (opt.variant == "lora" || (opt.variant == "auto" && spec.lora_rank))
    pass = PassMode::kLora;
  else if (opt.variant != "std" && opt.variant != "auto")
    throw std::invalid_argument("--variant must be auto, std, or lora");

  CostPoly poly;
  std::vector<LineItem> items;
  if (opt.mode == "fwd-block") {
    poly = fwd_block_poly(spec, pass);
    items = block_line_items(spec, pass, true);
  } else if (opt.mode == "bwd-block") {
    poly = bwd_block_poly(spec, pass);
    items = block_line_items(spec, pass, false);
  } else if (opt.mode == "block") {
    poly = fwd_block_poly(spec, pass) + bwd_block_poly(spec, pass);
  } else if (opt.mode == "train-model" || opt.mode == "train-epoch") {
    poly = train_model_poly(spec, pass);
  } else if (opt.mode == "infer-model" || opt.mode == "infer-epoch") {
    poly = infer_model_poly(spec);
  } else {
    throw std::invalid_argument(
        "--mode must be one of fwd-block, bwd-block, block, train-model, "
        "infer-model, train-epoch, infer-epoch, amortize");
  }

  const bool epoch = opt.mode == "train-epoch" || opt.mode == "infer-epoch";
  Int value;
  if (epoch) {
    EpochMode em = opt.mode == "train-epoch"
                       ? (pass == PassMode::kLora ? EpochMode::kTrainLora
                                                  : EpochMode::kTrainStandard)
                       : EpochMode::kInfer;
    value = epoch_cost(spec, opt.m, opt.n, em);
  } else {
    value = poly.eval(Int(integral_m(opt.m)));
  }

  if (opt.json) {
    ordered_json j;
    j["mode"] = opt.mode;
    if (!opt.preset.empty()) j["preset"] = opt.preset;
    j["variant"] = pass == PassMode::kLora ? "lora" : "std";
    j["m"] = opt.m;
    if (epoch) j["n"] = opt.n;
    ordered_json coef;
    coef["const"] = to_string(poly.c0);
    coef["m"] = to_string(poly.c1);
    coef["m^2"] = to_string(poly.c2);
    j["coefficients"] = coef;
    ordered_json rows = ordered_json::array();
    for (const auto& item : items) {
      ordered_json row;
      row["component"] = item.name;
      row["m"] = to_string(item.poly.c1);
      row["m^2"] = to_string(item.poly.c2);
      rows.push_back(row);
    }
    if (!rows.empty()) j["line_items"] = rows;
    j["flops"] = to_string(value);
    j["flops_sci"] = format_sci(static_cast<double>(value));
    std::printf("%s\n", j.dump().c_str());
  } else {
    std::printf("%-34s %s\n", "mode", opt.mode.c_str());
    if (!opt.preset.empty()) std::printf("%-34s %s\n", "preset", opt.preset.c_str());
    std::printf("%-34s %s\n", "variant", pass == PassMode::kLora ? "lora" : "std");
    std::printf("%-34s %g\n", "m", opt.m);
    if (epoch) std::printf("%-34s %" PRId64 "\n", "N", opt.n);
    for (const auto& item : items)
      std::printf("%-34s %s m + %s m^2\n", item.name.c_str(),
                  to_string(item.poly.c1).c_str(), to_string(item.poly.c2).c_str());
    std::printf("%-34s %s m + %s m^2 + %s\n", "polynomial",
                to_string(poly.c1).c_str(), to_string(poly.c2).c_str(),
                to_string(poly.c0).c_str());
    std::printf("%-34s %s\n", "flops", to_string(value).c_str());
    std::printf("%-34s %s\n", "flops (scientific)",
                format_sci(static_cast<double>(value)).c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// baseline

int run_baseline_cosine(const std::string& text, const std::string& labels_csv,
                        const std::string& mode, std::size_t dq, std::uint64_t seed,
                        bool json) {
  const auto labels = split_csv(labels_csv);
  if (labels.empty()) throw std::invalid_argument("--labels must name at least one label");
  const sce::SimilarityMode sim = mode == "cosine" ? sce::SimilarityMode::kCosine
                                                   : sce::SimilarityMode::kDot;
  if (mode != "cosine" && mode != "dot")
    throw std::invalid_argument("--mode must be dot or cosine");

  const sce::HashedProvider provider(dq, seed);
  std::vector<sce::Tensor> label_vecs;
  for (const auto& l : labels) label_vecs.push_back(provider.embed(l));
  const auto dist = sce::cosine_classify(provider.embed(text), label_vecs, sim);

  if (json) {
    ordered_json j;
    j["label"] = labels[dist.argmax_index];
    ordered_json probs = ordered_json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) probs[labels[i]] = dist.probs[i];
    j["probs"] = probs;
    std::printf("%s\n", j.dump().c_str());
  } else {
    std::printf("%s\n", labels[dist.argmax_index].c_str());
    for (std::size_t i = 0; i < labels.size(); ++i)
      std::printf("%s\t%.6f\n", labels[i].c_str(), dist.probs[i]);
  }
  return 0;
}

int run_baseline_subset(const std::string& logits_path, bool json) {
  const auto view = sce::load_logits_file(logits_path);
  const auto dist = sce::llm_subset_softmax(view);
  if (json) {
    ordered_json j;
    j["token_id"] = view.label_token_ids[dist.argmax_index];
    ordered_json probs = ordered_json::array();
    for (std::size_t i = 0; i < view.label_token_ids.size(); ++i) {
      ordered_json row;
      row["token_id"] = view.label_token_ids[i];
      row["prob"] = dist.probs[i];
      probs.push_back(row);
    }
    j["probs"] = probs;
    std::printf("%s\n", j.dump().c_str());
  } else {
    std::printf("%zu\n", view.label_token_ids[dist.argmax_index]);
    for (std::size_t i = 0; i < view.label_token_ids.size(); ++i)
      std::printf("%zu\t%.6f\n", view.label_token_ids[i], dist.probs[i]);
  }
  return 0;
}

int run_baseline_prompt(const std::string& text, const std::string& labels_csv,
                        const std::string& template_path) {
  std::string tpl = sce::kPromptTemplate;
  if (!template_path.empty()) {
    std::ifstream f(template_path, std::ios::binary);
    if (!f) throw sce::IoError("cannot open template: " + template_path);
    tpl.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }
  std::printf("%s", sce::render_prompt(text, split_csv(labels_csv), tpl).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// gen-data / grad-check

int run_gen_data(const std::string& spec_path, const std::string& out_dir) {
  const auto spec = sce::SyntheticCorpusSpec::from_file(spec_path);
  const auto corpus = sce::gen_synthetic(spec);
  const std::string base = out_dir.empty() ? "." : out_dir;
  sce::save_jsonl(corpus.train, base + "/train.jsonl");
  sce::save_jsonl(corpus.seen_test, base + "/seen_test.jsonl");
  sce::save_jsonl(corpus.unseen_test, base + "/unseen_test.jsonl");
  std::printf("train %zu\nseen_test %zu\nunseen_test %zu\n", corpus.train.size(),
              corpus.seen_test.size(), corpus.unseen_test.size());
  return 0;
}

int run_grad_check(std::uint64_t seed, double h, bool json) {
  const std::vector<std::string> tokens = {"alpha", "beta", "gamma", "delta",
                                           "epsilon", "zeta"};
  sce::Rng rng(seed);
  sce::SceParams params;
  sce::EncoderConfig cfg;
  cfg.layers = 2;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.head_dim = 4;
  cfg.ffn_dim = 16;
  params.encoder = sce::EncoderParams::init(cfg, rng);
  params.table = sce::LabelEmbeddingTable::random_init(tokens, cfg.dim, seed + 1);
  params.adaptor = sce::QueryAdaptor::init(cfg.dim, 8, rng);

  sce::ClassificationInstance inst;
  inst.text = "alpha beta words for the probe";
  inst.labels = {"alpha", "beta", "gamma", "delta"};
  inst.gold = seed % 4;

  const sce::HashedProvider provider(8, seed);
  const auto report = sce::grad_check_model(inst, params, provider, h);

  if (json) {
    ordered_json j;
    j["h"] = report.h;
    j["max_rel_err"] = report.max_rel_err;
    j["degraded"] = report.degraded;
    ordered_json rows = ordered_json::array();
    for (const auto& e : report.entries) {
      ordered_json row;
      row["array"] = e.name;
      row["max_rel_err"] = e.max_rel_err;
      rows.push_back(row);
    }
    j["arrays"] = rows;
    std::printf("%s\n", j.dump().c_str());
  } else {
    for (const auto& e : report.entries)
      std::printf("%-22s max_rel_err %.3e\n", e.name.c_str(), e.max_rel_err);
    std::printf("%-22s max_rel_err %.3e%s\n", "OVERALL", report.max_rel_err,
                report.degraded ? "  DEGRADED (step too coarse)" : "");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soft contextualized encoder: training, inference, baselines, and "
               "the transformer FLOP cost model"};
  app.require_subcommand(1);

  TrainOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "train a model on a JSONL dataset");
  train_cmd->add_option("--data", train_opts.data, "training JSONL")->required();
  train_cmd->add_option("--out", train_opts.out, "output checkpoint path")->required();
  train_cmd->add_option("--history", train_opts.history, "history JSONL path");
  train_cmd->add_option("--config", train_opts.config, "key=value training config file");
  train_cmd->add_option("--vocab-from", train_opts.vocab_from,
                        "extra JSONL files whose tokens join the vocabulary");
  train_cmd->add_option("--layers", train_opts.layers, "encoder layers");
  train_cmd->add_option("--dim", train_opts.dim, "encoder hidden size");
  train_cmd->add_option("--heads", train_opts.heads, "attention heads");
  train_cmd->add_option("--ffn-dim", train_opts.ffn_dim, "FFN inner size");
  train_cmd->add_option("--query-dim", train_opts.query_dim, "external embedding size");
  train_cmd->add_option("--table", train_opts.table_kind,
                        "label table init: hashed or random");
  train_cmd->add_flag("--unfreeze-table", train_opts.unfreeze_table,
                      "let the label table train");
  train_cmd->add_option("--seed", train_opts.seed, "seed for all randomness");
  train_cmd->add_option("--epochs", train_opts.epochs, "epoch count");
  train_cmd->add_option("--batch-size", train_opts.batch_size, "batch size");
  train_cmd->add_option("--lr", train_opts.lr, "learning rate");
  train_cmd->add_option("--synonym-prob", train_opts.synonym_prob,
                        "synonym substitution probability");
  train_cmd->add_option("--weight-decay", train_opts.weight_decay,
                        "decoupled weight decay");

  std::string eval_ckpt, eval_data, eval_embeddings;
  bool eval_json = false;
  auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--embeddings", eval_embeddings, "precomputed embedding file");
  eval_cmd->add_flag("--json", eval_json);

  std::string cls_ckpt, cls_text, cls_labels, cls_embeddings;
  bool cls_json = false;
  auto* cls_cmd = app.add_subcommand("classify", "classify one text against labels");
  cls_cmd->add_option("--checkpoint", cls_ckpt)->required();
  cls_cmd->add_option("--text", cls_text)->required();
  cls_cmd->add_option("--labels", cls_labels, "comma-separated label list")->required();
  cls_cmd->add_option("--embeddings", cls_embeddings, "precomputed embedding file");
  cls_cmd->add_flag("--json", cls_json);

  FlopsOpts flops_opts;
  auto* flops_cmd = app.add_subcommand("flops", "transformer FLOP cost model");
  flops_cmd->add_option("--preset", flops_opts.preset, "named architecture preset");
  flops_cmd->add_option("--layers", flops_opts.layers);
  flops_cmd->add_option("--dim", flops_opts.dim);
  flops_cmd->add_option("--ffn-dim", flops_opts.ffn_dim);
  flops_cmd->add_option("--heads", flops_opts.heads);
  flops_cmd->add_option("--head-dim", flops_opts.head_dim);
  flops_cmd->add_option("--nf1", flops_opts.n_f1, "FFN expansion layer count");
  flops_cmd->add_option("--nf2", flops_opts.n_f2, "FFN contraction layer count");
  flops_cmd->add_option("--rank", flops_opts.rank, "LoRA rank");
  flops_cmd->add_option("--ext-dim", flops_opts.ext_dim, "external embedding dim");
  flops_cmd->add_option("--m", flops_opts.m, "tokens per sequence");
  flops_cmd->add_option("--n", flops_opts.n, "samples per epoch");
  flops_cmd->add_option("--mode", flops_opts.mode,
                        "fwd-block | bwd-block | block | train-model | infer-model | "
                        "train-epoch | infer-epoch | amortize");
  flops_cmd->add_option("--variant", flops_opts.variant, "auto | std | lora");
  flops_cmd->add_option("--epochs", flops_opts.epochs, "epochs for amortize mode");
  flops_cmd->add_option("--m-llama", flops_opts.m_llama);
  flops_cmd->add_option("--m-sce", flops_opts.m_sce);
  flops_cmd->add_option("--m-embed", flops_opts.m_embed);
  flops_cmd->add_flag("--json", flops_opts.json);

  auto* base_cmd = app.add_subcommand("baseline", "comparison methods");
  base_cmd->require_subcommand(1);
  std::string cos_text, cos_labels, cos_mode = "dot";
  std::size_t cos_dq = 32;
  std::uint64_t cos_seed = 0;
  bool cos_json = false;
  auto* cos_cmd = base_cmd->add_subcommand("cosine", "embedding similarity classifier");
  cos_cmd->add_option("--text", cos_text)->required();
  cos_cmd->add_option("--labels", cos_labels)->required();
  cos_cmd->add_option("--mode", cos_mode, "dot | cosine");
  cos_cmd->add_option("--dq", cos_dq, "embedding dimension");
  cos_cmd->add_option("--seed", cos_seed);
  cos_cmd->add_flag("--json", cos_json);

  std::string sub_logits;
  bool sub_json = false;
  auto* sub_cmd = base_cmd->add_subcommand("subset-softmax",
                                           "softmax over candidate token logits");
  sub_cmd->add_option("--logits", sub_logits, "logits file")->required();
  sub_cmd->add_flag("--json", sub_json);

  std::string prompt_text, prompt_labels, prompt_template;
  auto* prompt_cmd = base_cmd->add_subcommand("prompt", "render the classification prompt");
  prompt_cmd->add_option("--text", prompt_text)->required();
  prompt_cmd->add_option("--labels", prompt_labels)->required();
  prompt_cmd->add_option("--template", prompt_template, "template file override");

  std::string gen_spec, gen_out = ".";
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic topic corpus");
  gen_cmd->add_option("--spec", gen_spec, "corpus spec file")->required();
  gen_cmd->add_option("--out-dir", gen_out, "output directory");

  std::uint64_t gc_seed = 0;
  double gc_h = 1e-5;
  bool gc_json = false;
  auto* gc_cmd = app.add_subcommand("grad-check",
                                    "finite-difference check of the model gradients");
  gc_cmd->add_option("--seed", gc_seed);
  gc_cmd->add_option("--step", gc_h, "finite-difference step");
  gc_cmd->add_flag("--json", gc_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 1;
  }

  try {
    if (*train_cmd) return run_train(train_opts);
    if (*eval_cmd) return run_eval(eval_ckpt, eval_data, eval_embeddings, eval_json);
    if (*cls_cmd) return run_classify(cls_ckpt, cls_text, cls_labels, cls_embeddings, cls_json);
    if (*flops_cmd) return run_flops(flops_opts);
    if (*cos_cmd) return run_baseline_cosine(cos_text, cos_labels, cos_mode, cos_dq, cos_seed, cos_json);
    if (*sub_cmd) return run_baseline_subset(sub_logits, sub_json);
    if (*prompt_cmd) return run_baseline_prompt(prompt_text, prompt_labels, prompt_template);
    if (*gen_cmd) return run_gen_data(gen_spec, gen_out);
    if (*gc_cmd) return run_grad_check(gc_seed, gc_h, gc_json);
  } catch (const sce::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
