#include "sce/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sce/errors.hpp"
#include "sce/text.hpp"

namespace sce {

using ordered_json = nlohmann::ordered_json;

Vocabulary build_vocab(const std::vector<ClassificationInstance>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("cannot build vocab from empty corpus");

  std::vector<std::string> strings;
  for (const auto& inst : corpus) {
    strings.push_back(inst.text);
    for (const auto& label : inst.labels) {
      if (tokenize(label).size() != 1)
        throw std::invalid_argument("label is not a single token: \"" + label + "\"");
      strings.push_back(label);
    }
    for (const auto& [label, alts] : inst.synonyms) {
      strings.push_back(label);
      for (const auto& alt : alts) {
        if (tokenize(alt).size() != 1)
          throw std::invalid_argument("synonym is not a single token: \"" + alt + "\"");
        strings.push_back(alt);
      }
    }
  }
  std::sort(strings.begin(), strings.end());

  Vocabulary vocab;
  for (const auto& s : strings) {
    for (const auto& tok : tokenize(s)) {
      if (vocab.token_to_id.emplace(tok, vocab.id_to_token.size()).second)
        vocab.id_to_token.push_back(tok);
    }
  }
  return vocab;
}

std::vector<ClassificationInstance> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<ClassificationInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": malformed JSON: " + e.what());
    }
    try {
      ClassificationInstance inst;
      inst.text = j.at("text").get<std::string>();
      inst.labels = j.at("labels").get<std::vector<std::string>>();
      const auto gold = j.at("gold").get<long long>();
      if (gold < 0 || static_cast<std::size_t>(gold) >= inst.labels.size())
        throw std::invalid_argument("gold index out of range");
      inst.gold = static_cast<std::size_t>(gold);
      if (j.contains("synonyms")) {
        for (const auto& [key, val] : j.at("synonyms").items())
          inst.synonyms[key] = val.get<std::vector<std::string>>();
      }
      inst.validate();
      out.push_back(std::move(inst));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_jsonl(const std::vector<ClassificationInstance>& instances,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw IoError("cannot open dataset for writing: " + path);
  for (const auto& inst : instances) {
    ordered_json j;
    j["text"] = inst.text;
    j["labels"] = inst.labels;
    j["gold"] = inst.gold;
    if (!inst.synonyms.empty()) {
      ordered_json syn = ordered_json::object();
      for (const auto& [label, alts] : inst.synonyms) syn[label] = alts;
      j["synonyms"] = syn;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing dataset: " + path);
}

void SyntheticCorpusSpec::validate() const {
  if (topics.size() < 4)
    throw std::invalid_argument("need at least 4 topics for an unseen split");
  if (unseen_topics < 2 || unseen_topics > topics.size() - 2)
    throw std::invalid_argument("unseen_topics must be in [2, topics-2]");
  if (texts_per_topic < 1 || test_texts_per_topic < 1 || words_per_text < 1)
    throw std::invalid_argument("text counts must be positive");
  if (!(keyword_rate > 0.0 && keyword_rate <= 1.0))
    throw std::invalid_argument("keyword_rate must be in (0, 1]");
  if (keyword_rate < 1.0 && noise_vocab_size == 0)
    throw std::invalid_argument("keyword_rate < 1 requires a noise vocabulary");
  if (k_min < 1 || k_max < k_min)
    throw std::invalid_argument("need 1 <= k_min <= k_max");

  std::set<std::string> all_tokens;
  const auto claim = [&all_tokens](const std::string& word, const char* role) {
    if (tokenize(word).size() != 1)
      throw std::invalid_argument(std::string(role) + " is not a single token: \"" +
                                  word + "\"");
    if (!all_tokens.insert(tokenize(word)[0]).second)
      throw std::invalid_argument(std::string(role) + " \"" + word +
                                  "\" collides across topics");
  };
  for (const auto& topic : topics) {
    claim(topic.label, "label");
    for (const auto& kw : topic.keywords) claim(kw, "keyword");
    for (const auto& syn : topic.synonyms) claim(syn, "synonym");
  }
}

namespace {

std::string make_text(const TopicSpec& topic, const SyntheticCorpusSpec& spec,
                      Rng& rng) {
  std::vector<std::string> pool;
  pool.push_back(topic.label);
  pool.insert(pool.end(), topic.keywords.begin(), topic.keywords.end());
  pool.insert(pool.end(), topic.synonyms.begin(), topic.synonyms.end());

  std::string text;
  for (std::size_t w = 0; w < spec.words_per_text; ++w) {
    if (w) text += ' ';
    const bool keyword = spec.keyword_rate >= 1.0 || rng.uniform() < spec.keyword_rate;
    if (keyword) {
      text += pool[rng.below(pool.size())];
    } else {
      text += "nw" + std::to_string(rng.below(spec.noise_vocab_size));
    }
  }
  return text;
}

ClassificationInstance make_instance(const TopicSpec& topic,
                                     const std::vector<const TopicSpec*>& pool,
                                     std::size_t topic_pos,
                                     const SyntheticCorpusSpec& spec, Rng& rng) {
  ClassificationInstance inst;
  inst.text = make_text(topic, spec, rng);

  std::size_t k;
  if (spec.full_label_set) {
    k = pool.size();
  } else {
    const std::size_t hi = std::min(spec.k_max, pool.size());
    const std::size_t lo = std::min(spec.k_min, hi);
    k = lo + rng.below(hi - lo + 1);
  }

  // Gold plus k-1 distractors drawn without replacement, then shuffled.
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (i != topic_pos) others.push_back(i);
  rng.shuffle(others);
  std::vector<std::string> labels{topic.label};
  for (std::size_t i = 0; i + 1 < k; ++i) labels.push_back(pool[others[i]]->label);
  rng.shuffle(labels);
  inst.labels = labels;
  inst.gold = static_cast<std::size_t>(
      std::find(labels.begin(), labels.end(), topic.label) - labels.begin());
  if (!topic.synonyms.empty()) inst.synonyms[topic.label] = topic.synonyms;
  return inst;
}

}  // namespace

SyntheticCorpus gen_synthetic(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<std::size_t> topic_order(spec.topics.size());
  for (std::size_t i = 0; i < topic_order.size(); ++i) topic_order[i] = i;
  rng.shuffle(topic_order);

  std::vector<const TopicSpec*> seen, unseen;
  for (std::size_t i = 0; i < topic_order.size(); ++i) {
    const TopicSpec* t = &spec.topics[topic_order[i]];
    if (i < spec.topics.size() - spec.unseen_topics)
      seen.push_back(t);
    else
      unseen.push_back(t);
  }

  SyntheticCorpus corpus;
  for (std::size_t ti = 0; ti < seen.size(); ++ti) {
    for (std::size_t n = 0; n < spec.texts_per_topic; ++n)
      corpus.train.push_back(make_instance(*seen[ti], seen, ti, spec, rng));
    for (std::size_t n = 0; n < spec.test_texts_per_topic; ++n)
      corpus.seen_test.push_back(make_instance(*seen[ti], seen, ti, spec, rng));
  }
  for (std::size_t ti = 0; ti < unseen.size(); ++ti) {
    for (std::size_t n = 0; n < spec.test_texts_per_topic; ++n)
      corpus.unseen_test.push_back(make_instance(*unseen[ti], unseen, ti, spec, rng));
  }
  return corpus;
}

SyntheticCorpusSpec default_corpus_spec(std::size_t n_topics) {
  if (n_topics < 4) throw std::invalid_argument("need at least 4 topics");
  SyntheticCorpusSpec spec;
  for (std::size_t t = 0; t < n_topics; ++t) {
    TopicSpec topic;
    const std::string tag = "t" + std::to_string(t);
    topic.label = tag + "label";
    for (std::size_t k = 0; k < 3; ++k)
      topic.keywords.push_back(tag + "kw" + std::to_string(k));
    for (std::size_t s = 0; s < 2; ++s)
      topic.synonyms.push_back(tag + "syn" + std::to_string(s));
    spec.topics.push_back(std::move(topic));
  }
  return spec;
}

SyntheticCorpusSpec SyntheticCorpusSpec::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus spec: " + path);
  SyntheticCorpusSpec spec;
  spec.topics.clear();
  std::string line;
  std::size_t lineno = 0;
  bool in_topics = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line == "[topics]") {
      in_topics = true;
      continue;
    }
    const std::string where = path + ":" + std::to_string(lineno);
    if (!in_topics) {
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(where + ": expected key=value");
      const std::string key = line.substr(0, eq);
      const std::string val = line.substr(eq + 1);
      try {
        if (key == "texts_per_topic") spec.texts_per_topic = std::stoul(val);
        else if (key == "test_texts_per_topic") spec.test_texts_per_topic = std::stoul(val);
        else if (key == "words_per_text") spec.words_per_text = std::stoul(val);
        else if (key == "keyword_rate") spec.keyword_rate = std::stod(val);
        else if (key == "noise_vocab_size") spec.noise_vocab_size = std::stoul(val);
        else if (key == "unseen_topics") spec.unseen_topics = std::stoul(val);
        else if (key == "k_min") spec.k_min = std::stoul(val);
        else if (key == "k_max") spec.k_max = std::stoul(val);
        else if (key == "full_label_set") spec.full_label_set = val == "1" || val == "true";
        else if (key == "seed") spec.seed = std::stoull(val);
        else throw std::invalid_argument(where + ": unknown key \"" + key + "\"");
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception&) {
        throw std::invalid_argument(where + ": bad value for " + key);
      }
      continue;
    }
    // topic line: label: kw kw kw | syn syn
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument(where + ": expected \"label: keywords [| synonyms]\"");
    TopicSpec topic;
    topic.label = line.substr(0, colon);
    while (!topic.label.empty() && (topic.label.back() == ' ' || topic.label.back() == '\t'))
      topic.label.pop_back();
    while (!topic.label.empty() && (topic.label.front() == ' ' || topic.label.front() == '\t'))
      topic.label.erase(topic.label.begin());
    std::string rest = line.substr(colon + 1);
    std::string kw_part = rest, syn_part;
    const auto bar = rest.find('|');
    if (bar != std::string::npos) {
      kw_part = rest.substr(0, bar);
      syn_part = rest.substr(bar + 1);
    }
    std::istringstream kws(kw_part);
    for (std::string w; kws >> w;) topic.keywords.push_back(w);
    std::istringstream syns(syn_part);
    for (std::string w; syns >> w;) topic.synonyms.push_back(w);
    spec.topics.push_back(std::move(topic));
  }
  spec.validate();
  return spec;
}

}  // namespace sce
