#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdcr/cdcr.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  cdcr_status status;
};

void check(cdcr_status s) {
  if (s != CDCR_OK) throw Failure{s};
}

/// Owns a string returned by the library.
struct Text {
  char* p = nullptr;
  ~Text() { cdcr_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Corpus = Handle<cdcr_corpus, cdcr_corpus_free>;
using Vectors = Handle<cdcr_vectors, cdcr_vectors_free>;
using Pairs = Handle<cdcr_pairs, cdcr_pairs_free>;
using Features = Handle<cdcr_features, cdcr_features_free>;
using Model = Handle<cdcr_model, cdcr_model_free>;
using Partition = Handle<cdcr_partition, cdcr_partition_free>;

/// Inline JSON when the argument starts with '{' or '[', else a file to read.
std::string json_arg(const std::string& arg) {
  if (arg.empty() || arg.front() == '{' || arg.front() == '[') return arg;
  std::ifstream in(arg, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + arg + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string families_json(const std::vector<std::string>& families) {
  return json(families).dump();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

void load_vectors(const std::string& path, Vectors& v) {
  if (!path.empty()) check(cdcr_vectors_load(path.c_str(), &v.p));
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string precluster;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Base seed for sampling and tuning");
    cmd->add_option("--out-dir", out_dir, "Report directory");
    cmd->add_option("--precluster", precluster, "none, gold or kmeans")
        ->check(CLI::IsMember({"none", "gold", "kmeans"}));
  }

  std::string dump() const {
    json j = json::object();
    if (seed) j["seed"] = *seed;
    if (!out_dir.empty()) j["out_dir"] = out_dir;
    if (!precluster.empty()) j["precluster"] = precluster;
    return j.dump();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-document event coreference toolkit"};
  app.set_version_flag("--version", std::string(cdcr_version()));
  app.require_subcommand(1);

  // stats
  std::string corpus_path, out_path;
  auto* stats = app.add_subcommand("stats", "Corpus statistics as JSON");
  stats->add_option("corpus", corpus_path)->required()->check(CLI::ExistingFile);
  stats->add_option("-o,--out", out_path);

  // split
  std::string spec, out_dir;
  auto* split = app.add_subcommand("split", "Split a corpus into train/dev/test");
  split->add_option("corpus", corpus_path)->required()->check(CLI::ExistingFile);
  split->add_option("--spec", spec, "Split spec (JSON or file)")->required();
  split->add_option("--out-dir", out_dir)->required();

  // sample
  double c = 8.0;
  int k = 8;
  std::uint64_t seed = 0;
  bool all = false;
  auto* sample = app.add_subcommand("sample", "Sample training pairs");
  sample->add_option("corpus", corpus_path)->required()->check(CLI::ExistingFile);
  sample->add_option("-c", c, "Largest-cluster pair multiplier");
  sample->add_option("-k", k, "Negatives per positive");
  sample->add_option("--seed", seed);
  sample->add_flag("--all", all, "Every action pair instead of a sample");
  sample->add_option("-o,--out", out_path)->required();

  // featurize
  std::string pairs_path, vectors_path, binary_path;
  std::vector<std::string> families;
  auto* featurize = app.add_subcommand("featurize", "Feature rows for a pair file");
  featurize->add_option("corpus", corpus_path)->required()->check(CLI::ExistingFile);
  featurize->add_option("pairs", pairs_path)->required()->check(CLI::ExistingFile);
  featurize->add_option("--vectors", vectors_path)->check(CLI::ExistingFile);
  featurize->add_option("--families", families)->delimiter(',');
  featurize->add_option("-o,--out", out_path)->required();
  featurize->add_option("--binary", binary_path, "Also write the binary matrix");

  // select-features
  std::string train_path, dev_path, learner = "{}";
  auto* select = app.add_subcommand("select-features", "Recursive feature elimination");
  select->add_option("--train", train_path)->required()->check(CLI::ExistingFile);
  select->add_option("--dev", dev_path)->required()->check(CLI::ExistingFile);
  select->add_option("--learner", learner, "Learner config (JSON or file)");
  select->add_option("--seed", seed);
  select->add_option("-o,--out", out_path);

  // tune
  std::string config_path;
  Overrides overrides;
  auto* tune = app.add_subcommand("tune", "Tune classifier and clustering from a config");
  tune->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  overrides.add(tune);

  // train
  std::string features_path, importance_path;
  auto* train = app.add_subcommand("train", "Train a pair classifier");
  train->add_option("features", features_path)->required()->check(CLI::ExistingFile);
  train->add_option("--learner", learner, "Learner config (JSON or file)");
  train->add_option("--seed", seed);
  train->add_option("-o,--out", out_path)->required();
  train->add_option("--importance", importance_path, "Write importance TSV");

  // predict
  std::string model_path, link_types_path;
  double threshold = 0.5;
  auto* predict = app.add_subcommand("predict", "Pair probabilities as JSON lines");
  predict->add_option("model", model_path)->required()->check(CLI::ExistingFile);
  predict->add_option("features", features_path)->required()->check(CLI::ExistingFile);
  predict->add_option("-o,--out", out_path)->required();
  predict->add_option("--link-types", link_types_path, "Write per-link-type TSV");
  predict->add_option("--threshold", threshold);

  // cluster
  std::string clustering = "{}", precluster = "none", conll_path;
  unsigned threads = 0;
  auto* cluster = app.add_subcommand("cluster", "Cluster the action mentions of a corpus");
  cluster->add_option("model", model_path)->required()->check(CLI::ExistingFile);
  cluster->add_option("corpus", corpus_path)->required()->check(CLI::ExistingFile);
  cluster->add_option("--vectors", vectors_path)->check(CLI::ExistingFile);
  cluster->add_option("--families", families)->delimiter(',');
  cluster->add_option("--clustering", clustering, "Clustering config (JSON or file)");
  cluster->add_option("--precluster", precluster)->check(CLI::IsMember({"none", "gold", "kmeans"}));
  cluster->add_option("--seed", seed);
  cluster->add_option("--threads", threads);
  cluster->add_option("-o,--out", out_path)->required();
  cluster->add_option("--conll", conll_path, "Also write CoNLL format");

  // score
  std::string response_path, key_path;
  bool conll = false;
  auto* score = app.add_subcommand("score", "MUC, B3, CEAFe, LEA and CoNLL F1");
  score->add_option("response", response_path)->required()->check(CLI::ExistingFile);
  auto* score_corpus = score->add_option("--corpus", corpus_path, "Gold corpus")->check(CLI::ExistingFile);
  score->add_option("--key", key_path, "Gold partition")->check(CLI::ExistingFile)->excludes(score_corpus);
  score->add_flag("--conll", conll, "Partitions are in CoNLL format");
  score->add_option("-o,--out", out_path);

  // baseline
  std::string kind = "lemma", tune_on;
  std::optional<double> delta;
  auto* baseline = app.add_subcommand("baseline", "Lemma baselines");
  baseline->add_option("kind", kind)->required()->check(CLI::IsMember({"lemma", "lemma-delta", "lemma-time"}));
  baseline->add_option("corpus", corpus_path)->required()->check(CLI::ExistingFile);
  baseline->add_option("--delta", delta);
  baseline->add_option("--tune-on", tune_on, "Corpus to tune delta on")->check(CLI::ExistingFile);
  baseline->add_option("-o,--out", out_path)->required();

  // mask
  std::vector<std::string> components;
  std::string masked_keys_path;
  auto* mask = app.add_subcommand("mask", "Mask event components");
  mask->add_option("corpus", corpus_path)->required()->check(CLI::ExistingFile);
  mask->add_option("--components", components)->required()->delimiter(',');
  mask->add_option("--seed", seed);
  mask->add_option("-o,--out", out_path)->required();
  mask->add_option("--masked-keys", masked_keys_path);

  // experiment
  std::string mode;
  auto* experiment = app.add_subcommand("experiment", "Run a configured experiment");
  experiment->add_option("mode", mode)->required()->check(CLI::IsMember({"in-dataset", "cross-dataset"}));
  experiment->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  Overrides experiment_overrides;
  experiment_overrides.add(experiment);

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats->parsed()) {
      Corpus corpus;
      Text t;
      check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
      check(cdcr_corpus_stats_json(corpus.p, &t.p));
      emit(t.str(), out_path);
    } else if (split->parsed()) {
      Corpus corpus, a, b, d;
      check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
      check(cdcr_corpus_split(corpus.p, json_arg(spec).c_str(), &a.p, &b.p, &d.p));
      fs::create_directories(out_dir);
      check(cdcr_corpus_save(a.p, (fs::path(out_dir) / "train.json").c_str()));
      check(cdcr_corpus_save(b.p, (fs::path(out_dir) / "dev.json").c_str()));
      check(cdcr_corpus_save(d.p, (fs::path(out_dir) / "test.json").c_str()));
    } else if (sample->parsed()) {
      Corpus corpus;
      Pairs pairs;
      check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
      check(all ? cdcr_pairs_all(corpus.p, &pairs.p) : cdcr_pairs_sample(corpus.p, c, k, seed, &pairs.p));
      check(cdcr_pairs_save(pairs.p, out_path.c_str()));
      Text t;
      check(cdcr_pairs_provenance_json(pairs.p, &t.p));
      std::cerr << t.str() << '\n';
    } else if (featurize->parsed()) {
      Corpus corpus;
      Vectors vectors;
      Pairs pairs;
      Features features;
      check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
      load_vectors(vectors_path, vectors);
      check(cdcr_pairs_load(pairs_path.c_str(), &pairs.p));
      const std::string fam = families_json(families);
      check(cdcr_features_compute(corpus.p, vectors.p, families.empty() ? nullptr : fam.c_str(),
                                  pairs.p, &features.p));
      check(cdcr_features_save_jsonl(features.p, out_path.c_str()));
      if (!binary_path.empty()) check(cdcr_features_save_binary(features.p, binary_path.c_str()));
    } else if (select->parsed()) {
      Features tr, dv;
      Text t;
      check(cdcr_features_load_jsonl(train_path.c_str(), &tr.p));
      check(cdcr_features_load_jsonl(dev_path.c_str(), &dv.p));
      check(cdcr_select_features(tr.p, dv.p, json_arg(learner).c_str(), seed, &t.p));
      emit(t.str(), out_path);
    } else if (tune->parsed()) {
      Text t;
      check(cdcr_tune(config_path.c_str(), overrides.dump().c_str(), &t.p));
      if (overrides.out_dir.empty()) {
        emit(t.str(), "");
      } else {
        fs::create_directories(overrides.out_dir);
        emit(t.str(), (fs::path(overrides.out_dir) / "tuning.json").string());
      }
    } else if (train->parsed()) {
      Features features;
      Model model;
      check(cdcr_features_load_jsonl(features_path.c_str(), &features.p));
      check(cdcr_model_train(features.p, json_arg(learner).c_str(), seed, &model.p));
      check(cdcr_model_save(model.p, out_path.c_str()));
      if (!importance_path.empty()) {
        Text t;
        check(cdcr_model_importance_tsv(model.p, features.p, &t.p));
        emit(t.str(), importance_path);
      }
    } else if (predict->parsed()) {
      Model model;
      Features features;
      check(cdcr_model_load(model_path.c_str(), &model.p));
      check(cdcr_features_load_jsonl(features_path.c_str(), &features.p));
      check(cdcr_predict(model.p, features.p, out_path.c_str()));
      if (!link_types_path.empty()) {
        Text t;
        check(cdcr_link_type_report(model.p, features.p, threshold, &t.p));
        emit(t.str(), link_types_path);
      }
    } else if (cluster->parsed()) {
      Model model;
      Corpus corpus;
      Vectors vectors;
      Partition partition;
      check(cdcr_model_load(model_path.c_str(), &model.p));
      check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
      load_vectors(vectors_path, vectors);
      const std::string fam = families_json(families);
      check(cdcr_cluster(model.p, corpus.p, vectors.p, families.empty() ? nullptr : fam.c_str(),
                         json_arg(clustering).c_str(), precluster.c_str(), seed, threads,
                         &partition.p));
      check(cdcr_partition_save_json(partition.p, out_path.c_str()));
      if (!conll_path.empty()) check(cdcr_partition_save_conll(partition.p, conll_path.c_str()));
    } else if (score->parsed()) {
      Partition response, key;
      Text t;
      auto load = conll ? cdcr_partition_load_conll : cdcr_partition_load_json;
      check(load(response_path.c_str(), &response.p));
      if (!key_path.empty()) {
        check(load(key_path.c_str(), &key.p));
        check(cdcr_score(key.p, response.p, &t.p));
      } else if (!corpus_path.empty()) {
        Corpus corpus;
        check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
        check(cdcr_score_corpus(corpus.p, response.p, &t.p));
      } else {
        std::cerr << "score: give --corpus or --key\n";
        return CDCR_E_INVALID_ARGUMENT;
      }
      emit(t.str(), out_path);
    } else if (baseline->parsed()) {
      Corpus corpus;
      Partition partition;
      check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
      double d = delta.value_or(0.0);
      if (!tune_on.empty()) {
        Corpus train_corpus;
        double f1 = 0.0;
        check(cdcr_corpus_load(tune_on.c_str(), &train_corpus.p));
        check(cdcr_baseline_tune(train_corpus.p, kind.c_str(), &d, &f1));
        std::cerr << "delta " << d << " (train LEA F1 " << f1 << ")\n";
      } else if (!delta && kind != "lemma") {
        std::cerr << "baseline " << kind << ": give --delta or --tune-on\n";
        return CDCR_E_INVALID_ARGUMENT;
      }
      check(cdcr_baseline(corpus.p, kind.c_str(), d, &partition.p));
      check(cdcr_partition_save_json(partition.p, out_path.c_str()));
    } else if (mask->parsed()) {
      Corpus corpus, masked;
      Text keys;
      check(cdcr_corpus_load(corpus_path.c_str(), &corpus.p));
      const json spec_json = {{"components", components}, {"seed", seed}};
      check(cdcr_corpus_mask(corpus.p, spec_json.dump().c_str(), &masked.p, &keys.p));
      check(cdcr_corpus_save(masked.p, out_path.c_str()));
      if (!masked_keys_path.empty()) emit(keys.str(), masked_keys_path);
    } else if (experiment->parsed()) {
      Text t;
      check(cdcr_experiment(config_path.c_str(), mode.c_str(),
                            experiment_overrides.dump().c_str(), &t.p));
      if (experiment_overrides.out_dir.empty()) emit(t.str(), "");
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << cdcr_status_name(f.status) << "): " << cdcr_last_error() << '\n';
    return static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return CDCR_E_IO;
  }
  return 0;
}
