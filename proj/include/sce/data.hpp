#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sce/train.hpp"

namespace sce {

struct Vocabulary {
  std::unordered_map<std::string, std::size_t> token_to_id;
  std::vector<std::string> id_to_token;

  std::size_t size() const { return id_to_token.size(); }
};

// Deterministic word-level vocabulary: all corpus strings are sorted, then
// tokens get ids in first-seen order. Every label must be exactly one token.
Vocabulary build_vocab(const std::vector<ClassificationInstance>& corpus);

// One JSON object per line: {"text": str, "labels": [str], "gold": int,
// "synonyms": {label: [str]}?}. Errors carry the offending line number.
std::vector<ClassificationInstance> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<ClassificationInstance>& instances,
                const std::string& path);

struct TopicSpec {
  std::string label;
  std::vector<std::string> keywords;
  std::vector<std::string> synonyms;
};

struct SyntheticCorpusSpec {
  std::vector<TopicSpec> topics;             // >= 4, single-token labels
  std::size_t texts_per_topic = 32;          // train split
  std::size_t test_texts_per_topic = 8;      // each test split
  std::size_t words_per_text = 30;
  double keyword_rate = 0.5;
  std::size_t noise_vocab_size = 50;
  std::size_t unseen_topics = 2;             // excluded from train/seen_test
  std::size_t k_min = 3, k_max = 6;          // candidate-set size range
  bool full_label_set = false;               // every split label as candidate
  std::uint64_t seed = 0;

  void validate() const;
  // key=value lines plus a "[topics]" block: label: kw kw | syn syn
  static SyntheticCorpusSpec from_file(const std::string& path);
};

struct SyntheticCorpus {
  std::vector<ClassificationInstance> train;
  std::vector<ClassificationInstance> seen_test;
  std::vector<ClassificationInstance> unseen_test;
};

// Topic-keyword mixture corpus with a label-disjoint unseen split. A topic's
// effective keyword pool is {label} + keywords + synonyms, so label words
// occur in their topic's texts and synonym substitution stays learnable.
SyntheticCorpus gen_synthetic(const SyntheticCorpusSpec& spec);

// Convenience spec with generated labels/keywords/synonyms for tests and the
// CLI default pipeline.
SyntheticCorpusSpec default_corpus_spec(std::size_t n_topics);

}  // namespace sce
