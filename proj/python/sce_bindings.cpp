#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sce/baselines.hpp"
#include "sce/data.hpp"
#include "sce/flops.hpp"
#include "sce/model.hpp"
#include "sce/train.hpp"

namespace py = pybind11;

namespace {

std::vector<double> to_vec(const sce::Tensor& t) { return t.data; }

sce::Tensor from_vec(const std::vector<double>& v) {
  sce::Tensor t({v.size()});
  t.data = v;
  return t;
}

// __int128 -> arbitrary-precision python int
py::int_ to_py_int(sce::flops::Int v) {
  const std::string s = sce::flops::to_string(v);
  PyObject* o = PyLong_FromString(s.c_str(), nullptr, 10);
  if (!o) throw py::error_already_set();
  return py::reinterpret_steal<py::int_>(o);
}

sce::flops::ArchSpec spec_of(const std::string& preset_name) {
  const auto s = sce::flops::preset(preset_name);
  if (!s) throw std::invalid_argument("unknown preset: " + preset_name);
  return *s;
}

py::dict dist_dict(const sce::PredictionDistribution& dist,
                   const std::vector<std::string>& labels) {
  py::dict out;
  out["label"] = labels[dist.argmax_index];
  out["argmax_index"] = dist.argmax_index;
  py::dict probs;
  for (std::size_t i = 0; i < labels.size(); ++i)
    probs[py::str(labels[i])] = dist.probs[i];
  out["probs"] = probs;
  return out;
}

}  // namespace

PYBIND11_MODULE(sce_core, m) {
  m.doc() = "soft contextualized encoder core: kernels, model, baselines, FLOP model";

  // kernels
  m.def("softmax", [](const std::vector<double>& v) { return to_vec(sce::softmax(from_vec(v))); });
  m.def("gelu", [](const std::vector<double>& v) { return to_vec(sce::gelu(from_vec(v))); });
  m.def("layer_norm",
        [](const std::vector<double>& v, const std::vector<double>& gain,
           const std::vector<double>& bias, double eps) {
          return to_vec(sce::layer_norm(from_vec(v), from_vec(gain), from_vec(bias), eps));
        },
        py::arg("v"), py::arg("gain"), py::arg("bias"), py::arg("eps") = 1e-5);
  m.def("cross_entropy", [](const std::vector<double>& p_hat, const std::vector<double>& p) {
    return sce::cross_entropy(from_vec(p_hat), from_vec(p));
  });

  // frozen text embedding
  m.def("embed_text",
        [](const std::string& text, std::size_t dim, std::uint64_t seed) {
          return to_vec(sce::HashedProvider(dim, seed).embed(text));
        },
        py::arg("text"), py::arg("dim") = 32, py::arg("seed") = 0);

  // baselines
  m.def("cosine_classify",
        [](const std::vector<double>& z, const std::vector<std::vector<double>>& labels,
           const std::string& mode) {
          std::vector<sce::Tensor> vecs;
          for (const auto& l : labels) vecs.push_back(from_vec(l));
          const auto dist = sce::cosine_classify(
              from_vec(z), vecs,
              mode == "cosine" ? sce::SimilarityMode::kCosine : sce::SimilarityMode::kDot);
          return py::make_tuple(dist.argmax_index, to_vec(dist.probs));
        },
        py::arg("z"), py::arg("label_vecs"), py::arg("mode") = "dot");
  m.def("subset_softmax",
        [](const std::vector<double>& logits, const std::vector<std::size_t>& ids) {
          const auto dist = sce::llm_subset_softmax({from_vec(logits), ids});
          return py::make_tuple(dist.argmax_index, to_vec(dist.probs));
        });
  m.def("render_prompt", [](const std::string& text, const std::vector<std::string>& labels) {
    return sce::render_prompt(text, labels);
  });

  // flop cost model
  auto flops = m.def_submodule("flops", "closed-form transformer FLOP cost model");
  flops.def("preset_names", &sce::flops::preset_names);
  flops.def("coefficients", [](const std::string& preset_name, const std::string& kind) {
    const auto spec = spec_of(preset_name);
    sce::flops::CostPoly poly;
    if (kind == "train-model")
      poly = sce::flops::train_model_poly(
          spec, spec.lora_rank ? sce::flops::PassMode::kLora : sce::flops::PassMode::kStandard);
    else if (kind == "infer-model")
      poly = sce::flops::infer_model_poly(spec);
    else if (kind == "block")
      poly = sce::flops::fwd_block_poly(spec, spec.lora_rank ? sce::flops::PassMode::kLora
                                                             : sce::flops::PassMode::kStandard) +
             sce::flops::bwd_block_poly(spec, spec.lora_rank ? sce::flops::PassMode::kLora
                                                             : sce::flops::PassMode::kStandard);
    else
      throw std::invalid_argument("kind must be block, train-model, or infer-model");
    py::dict out;
    out["const"] = to_py_int(poly.c0);
    out["m"] = to_py_int(poly.c1);
    out["m^2"] = to_py_int(poly.c2);
    return out;
  });
  flops.def("epoch_cost",
            [](const std::string& preset_name, double m, std::int64_t n,
               const std::string& mode) {
              const auto spec = spec_of(preset_name);
              sce::flops::EpochMode em;
              if (mode == "train")
                em = spec.lora_rank ? sce::flops::EpochMode::kTrainLora
                                    : sce::flops::EpochMode::kTrainStandard;
              else if (mode == "infer")
                em = sce::flops::EpochMode::kInfer;
              else
                throw std::invalid_argument("mode must be train or infer");
              return to_py_int(sce::flops::epoch_cost(spec, m, n, em));
            },
            py::arg("preset"), py::arg("m"), py::arg("n"), py::arg("mode") = "train");

  // data generation + training pipeline
  m.def("gen_corpus",
        [](const std::string& spec_path, const std::string& out_dir) {
          const auto corpus = sce::gen_synthetic(sce::SyntheticCorpusSpec::from_file(spec_path));
          sce::save_jsonl(corpus.train, out_dir + "/train.jsonl");
          sce::save_jsonl(corpus.seen_test, out_dir + "/seen_test.jsonl");
          sce::save_jsonl(corpus.unseen_test, out_dir + "/unseen_test.jsonl");
          return py::make_tuple(corpus.train.size(), corpus.seen_test.size(),
                                corpus.unseen_test.size());
        });
  m.def("train_file",
        [](const std::string& data, const std::string& out_checkpoint,
           const std::vector<std::string>& vocab_from, std::size_t epochs,
           std::size_t batch_size, double lr, std::uint64_t seed, std::size_t dim,
           std::size_t heads, std::size_t ffn_dim, std::size_t layers,
           std::size_t query_dim, const std::string& table) {
          const auto dataset = sce::load_jsonl(data);
          auto vocab_corpus = dataset;
          for (const auto& extra : vocab_from)
            for (auto& inst : sce::load_jsonl(extra)) vocab_corpus.push_back(std::move(inst));
          const auto vocab = sce::build_vocab(vocab_corpus);

          sce::EncoderConfig cfg;
          cfg.layers = layers;
          cfg.dim = dim;
          cfg.heads = heads;
          cfg.head_dim = dim / heads;
          cfg.ffn_dim = ffn_dim;

          sce::Rng rng(seed);
          sce::SceParams params;
          params.encoder = sce::EncoderParams::init(cfg, rng);
          params.table = table == "hashed"
                             ? sce::LabelEmbeddingTable::hashed_init(vocab.id_to_token, dim, seed)
                             : sce::LabelEmbeddingTable::random_init(vocab.id_to_token, dim, seed);
          params.adaptor = sce::QueryAdaptor::init(dim, query_dim, rng);
          params.provider_seed = seed;

          sce::TrainConfig tc;
          tc.epochs = epochs;
          tc.batch_size = batch_size;
          tc.learning_rate = lr;
          tc.seed = seed;
          const sce::HashedProvider provider(query_dim, seed);
          const auto history = sce::train(dataset, params, tc, provider);
          sce::save_checkpoint(params, out_checkpoint);
          py::list hist;
          for (const auto& e : history) {
            py::dict row;
            row["epoch"] = e.epoch;
            row["loss"] = e.loss;
            row["acc"] = e.accuracy;
            hist.append(row);
          }
          return hist;
        },
        py::arg("data"), py::arg("out_checkpoint"),
        py::arg("vocab_from") = std::vector<std::string>{}, py::arg("epochs") = 10,
        py::arg("batch_size") = 8, py::arg("lr") = 1e-3, py::arg("seed") = 0,
        py::arg("dim") = 32, py::arg("heads") = 4, py::arg("ffn_dim") = 64,
        py::arg("layers") = 2, py::arg("query_dim") = 32, py::arg("table") = "hashed");
  m.def("classify_file",
        [](const std::string& checkpoint, const std::string& text,
           const std::vector<std::string>& labels) {
          const auto params = sce::load_checkpoint(checkpoint);
          const sce::HashedProvider provider(params.query_dim(), params.provider_seed);
          const auto dist = sce::forward_scores(provider.embed(text), labels, params);
          return dist_dict(dist, labels);
        });
  m.def("eval_file", [](const std::string& checkpoint, const std::string& data) {
    const auto params = sce::load_checkpoint(checkpoint);
    const sce::HashedProvider provider(params.query_dim(), params.provider_seed);
    const auto dataset = sce::load_jsonl(data);
    std::size_t correct = 0;
    for (const auto& inst : dataset)
      if (sce::predict(inst.text, inst.labels, params, provider) == inst.labels[inst.gold])
        ++correct;
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
  });
}
