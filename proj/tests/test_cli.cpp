#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include <nlohmann/json.hpp>

namespace {

struct CliResult {
  int exit_code;
  std::string out;
};

std::string cli_path() {
  const char* p = std::getenv("SCE_CLI");
  REQUIRE_MESSAGE(p != nullptr, "SCE_CLI must point at the sce binary");
  return p;
}

CliResult run_cli(const std::string& args, bool merge_stderr = false) {
  const std::string cmd =
      cli_path() + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return CliResult{WEXITSTATUS(status), out};
}

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "sce_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), {});
}

void write_corpus_spec(const std::filesystem::path& path) {
  std::ofstream f(path);
  f << "texts_per_topic=8\n";
  f << "test_texts_per_topic=4\n";
  f << "words_per_text=12\n";
  f << "keyword_rate=0.8\n";
  f << "noise_vocab_size=10\n";
  f << "unseen_topics=2\n";
  f << "k_min=2\nk_max=3\n";
  f << "seed=4\n";
  f << "[topics]\n";
  f << "sport: ball team | game\n";
  f << "music: song band | tune\n";
  f << "food: bread soup | meal\n";
  f << "travel: plane hotel | trip\n";
  f << "science: atom laser | physics\n";
  f << "money: bank coin | cash\n";
}

}  // namespace

TEST_CASE("cli: unknown subcommand exits 1, missing file exits 2") {
  CHECK(run_cli("no-such-subcommand", true).exit_code == 1);
  CHECK(run_cli("eval --checkpoint /nonexistent.ckpt --data /nonexistent.jsonl", true)
            .exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("cli: flops reproduces the llama epoch total exactly") {
  const auto r = run_cli(
      "flops --preset llama-3.2-1b-lora-r180 --m 225 --n 16000 --mode train-epoch --json");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["flops"] == "9355316428800000");
  CHECK(j["flops_sci"] == "9.355e+15");
  CHECK(j["coefficients"]["m"] == "2554462208");
  CHECK(j["coefficients"]["m^2"] == "196608");

  const auto plain = run_cli(
      "flops --preset llama-3.2-1b-lora-r180 --m 225 --n 16000 --mode train-epoch");
  CHECK(plain.out.find("9355316428800000") != std::string::npos);

  // identical invocations give identical bytes
  const auto again = run_cli(
      "flops --preset llama-3.2-1b-lora-r180 --m 225 --n 16000 --mode train-epoch --json");
  CHECK(again.out == r.out);
}

TEST_CASE("cli: flops validation failures exit 1") {
  CHECK(run_cli("flops --preset no-such-preset --m 1", true).exit_code == 1);
  CHECK(run_cli("flops --preset roberta-base --m 1.5 --mode block", true).exit_code == 1);
  CHECK(run_cli("flops --preset roberta-base --m 1 --mode bogus", true).exit_code == 1);
}

TEST_CASE("cli: flops amortize summarises the reference presets") {
  const auto r = run_cli("flops --mode amortize --n 16000 --epochs 3 --json");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["llama_epoch_flops"] == "9355316428800000");
  const double ratio = j["per_epoch_ratio"].get<double>();
  CHECK(std::round(ratio * 1000.0) / 1000.0 == 0.005);
  CHECK(j["cumulative_ratio"].size() == 3);
}

TEST_CASE("cli: gen-data, train, eval, classify round trip") {
  const auto dir = work_dir();
  write_corpus_spec(dir / "spec.txt");

  const auto gen = run_cli("gen-data --spec " + (dir / "spec.txt").string() +
                           " --out-dir " + dir.string());
  REQUIRE(gen.exit_code == 0);
  CHECK(std::filesystem::exists(dir / "train.jsonl"));
  CHECK(std::filesystem::exists(dir / "seen_test.jsonl"));
  CHECK(std::filesystem::exists(dir / "unseen_test.jsonl"));

  // determinism of generation
  const std::string train_bytes = read_file(dir / "train.jsonl");
  run_cli("gen-data --spec " + (dir / "spec.txt").string() + " --out-dir " + dir.string());
  CHECK(read_file(dir / "train.jsonl") == train_bytes);

  {
    std::ofstream cfg(dir / "train.cfg");
    cfg << "learning_rate=0.01\nepochs=60\nbatch_size=8\nsynonym_prob=0.5\n";
  }
  const std::string common =
      " --data " + (dir / "train.jsonl").string() + " --config " +
      (dir / "train.cfg").string() + " --history " + (dir / "hist.jsonl").string() +
      " --vocab-from " + (dir / "seen_test.jsonl").string() + " --vocab-from " +
      (dir / "unseen_test.jsonl").string() +
      " --dim 16 --heads 2 --ffn-dim 32 --query-dim 16 --layers 1 --table hashed"
      " --seed 0";
  const auto train =
      run_cli("train" + common + " --out " + (dir / "model.ckpt").string());
  REQUIRE(train.exit_code == 0);

  // history: one JSON object per line with the documented keys
  std::ifstream hist(dir / "hist.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(hist, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("epoch"));
    CHECK(j.contains("loss"));
    CHECK(j.contains("acc"));
    ++lines;
  }
  CHECK(lines == 60);

  // determinism: retrain into a second checkpoint, byte-compare
  const auto train2 =
      run_cli("train" + common + " --out " + (dir / "model2.ckpt").string());
  REQUIRE(train2.exit_code == 0);
  CHECK(read_file(dir / "model.ckpt") == read_file(dir / "model2.ckpt"));
  CHECK(!read_file(dir / "model.ckpt").empty());

  // the toy corpus overfits; accuracy prints as a decimal percent, 2 places
  const auto eval = run_cli("eval --checkpoint " + (dir / "model.ckpt").string() +
                            " --data " + (dir / "train.jsonl").string());
  REQUIRE(eval.exit_code == 0);
  CHECK(eval.out == "100.00\n");

  const auto unseen = run_cli("eval --checkpoint " + (dir / "model.ckpt").string() +
                              " --data " + (dir / "unseen_test.jsonl").string() +
                              " --json");
  REQUIRE(unseen.exit_code == 0);
  const auto uj = nlohmann::json::parse(unseen.out);
  CHECK(uj.contains("accuracy"));
  CHECK(uj["total"].get<int>() == 8);

  const auto cls = run_cli("classify --checkpoint " + (dir / "model.ckpt").string() +
                           " --text \"ball team ball\" --labels sport --json");
  REQUIRE(cls.exit_code == 0);
  const auto cj = nlohmann::json::parse(cls.out);
  CHECK(cj["label"] == "sport");
  CHECK(cj["probs"]["sport"].get<double>() == 1.0);

  // precomputed embeddings override the checkpoint's hashed provider
  {
    std::ofstream emb(dir / "emb.txt");
    emb << "dim=16\n";
    emb << "q1\t1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\n";
  }
  const auto pre = run_cli("classify --checkpoint " + (dir / "model.ckpt").string() +
                           " --embeddings " + (dir / "emb.txt").string() +
                           " --text q1 --labels sport,music --json");
  REQUIRE(pre.exit_code == 0);
  CHECK(nlohmann::json::parse(pre.out)["probs"].size() == 2);
}

TEST_CASE("cli: baseline subcommands") {
  const auto dir = work_dir();
  {
    std::ofstream f(dir / "logits.txt");
    f << "vocab=6\n";
    f << "0 0.6931471805599453 0 0 0 0\n";  // ln 2 at index 1
    f << "0 1\n";
  }
  const auto sub = run_cli("baseline subset-softmax --logits " +
                           (dir / "logits.txt").string() + " --json");
  REQUIRE(sub.exit_code == 0);
  const auto sj = nlohmann::json::parse(sub.out);
  CHECK(sj["token_id"] == 1);
  CHECK(sj["probs"][0]["prob"].get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-9));

  const auto cos = run_cli(
      "baseline cosine --text \"ball ball game\" --labels ball,song --mode cosine --json");
  REQUIRE(cos.exit_code == 0);
  CHECK(nlohmann::json::parse(cos.out)["label"] == "ball");

  const auto prompt =
      run_cli("baseline prompt --text \"a snippet\" --labels sport,music");
  REQUIRE(prompt.exit_code == 0);
  CHECK(prompt.out.find("a snippet") != std::string::npos);
  CHECK(prompt.out.find("sport, music") != std::string::npos);
  CHECK(prompt.out.find("{text_excerpt}") == std::string::npos);
}

TEST_CASE("cli: grad-check reports per-array agreement") {
  const auto r = run_cli("grad-check --seed 1 --json");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["max_rel_err"].get<double>() < 1e-4);
  CHECK_FALSE(j["degraded"].get<bool>());
  CHECK(j["arrays"].size() > 10);

  const auto coarse = run_cli("grad-check --seed 1 --step 0.1 --json");
  CHECK(nlohmann::json::parse(coarse.out)["degraded"].get<bool>());
}
