#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "cdcr/harness.hpp"
#include "cdcr/random.hpp"
#include "cdcr/version.hpp"

namespace cdcr {

using nlohmann::json;

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
  }
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// tf-idf model and extractor bound to one corpus; heap-held so the
/// extractor's references stay valid.
struct FeatureContext {
  TfIdfModel tfidf;
  std::unique_ptr<FeatureExtractor> extractor;

  FeatureContext(const Corpus& corpus, const VectorStore& vectors, const FeatureToggles& toggles)
      : tfidf(TfIdfModel::fit(corpus)),
        extractor(std::make_unique<FeatureExtractor>(corpus, tfidf, &vectors, toggles)) {}
  FeatureContext(const FeatureContext&) = delete;
};

json metric_json(const MetricReport& r) { return json::parse(r.to_json()); }

json scores_json(const BinaryScores& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json("n/a"); };
  return {{"pairs", s.pairs},        {"gold_positives", s.gold_positives},
          {"P", opt(s.precision)},   {"R", opt(s.recall)},
          {"F1", opt(s.f1)}};
}

json provenance_json(const PairSetProvenance& p) {
  return {{"corpus_id", p.corpus_id},
          {"c", p.config.c},
          {"k", p.config.k},
          {"seed", p.config.seed},
          {"positives", p.positives},
          {"negatives", p.negatives},
          {"negative_targets", p.negative_targets},
          {"negative_pool", p.negative_pool},
          {"negatives_nondecreasing", p.negatives_nondecreasing}};
}

SearchSpace space_from_json(const json& j) {
  SearchSpace space;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it->is_array()) throw SchemaError("search dimension '" + it.key() + "' must be a list");
    space[it.key()] = std::vector<json>(it->begin(), it->end());
  }
  return space;
}

json space_to_json(const SearchSpace& space) {
  json j = json::object();
  for (const auto& [k, v] : space) j[k] = v;
  return j;
}

SearchSpace default_learner_space(LearnerKind kind) {
  if (kind == LearnerKind::linear_logistic) {
    return {{"l2", {1e-4, 1e-3, 1e-2, 1e-1}},
            {"learning_rate", {0.1, 0.5, 1.0}},
            {"epochs", {200, 500}}};
  }
  return {{"trees", {25, 50, 100, 200}},
          {"max_depth", {2, 3, 4, 6}},
          {"learning_rate", {0.05, 0.1, 0.3}},
          {"min_child_weight", {0.5, 1.0, 2.0}},
          {"subsample", {0.8, 1.0}},
          {"colsample", {0.5, 0.8, 1.0}}};
}

SearchSpace default_clustering_space() {
  std::vector<json> thresholds;
  for (int i = 1; i <= 19; ++i) thresholds.push_back(i * 0.05);
  return {{"linkage", {"single", "complete", "average"}},
          {"criterion", {"distance"}},
          {"threshold", thresholds}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

FeatureToggles toggles_from_json(const json& j) {
  if (!j.contains("families")) return {};
  std::vector<FeatureFamily> families;
  for (const auto& f : j.at("families")) families.push_back(feature_family_from_string(f.get<std::string>()));
  return FeatureToggles::only(families);
}

std::vector<std::string> union_schema(const FeatureToggles& toggles,
                                      const std::vector<std::vector<std::string>>& parts) {
  std::set<std::string> wanted;
  for (const auto& p : parts) wanted.insert(p.begin(), p.end());
  std::vector<std::string> out;
  for (const std::string& name : feature_names(toggles)) {
    if (wanted.count(name)) out.push_back(name);
  }
  return out;
}

}  // namespace

std::string_view to_string(PreclusterMode mode) {
  switch (mode) {
    case PreclusterMode::none: return "none";
    case PreclusterMode::gold: return "gold";
    case PreclusterMode::kmeans: return "kmeans";
  }
  return "none";
}

PreclusterMode precluster_mode_from_string(std::string_view name) {
  if (name == "none") return PreclusterMode::none;
  if (name == "gold") return PreclusterMode::gold;
  if (name == "kmeans") return PreclusterMode::kmeans;
  throw InvalidArgument("unknown precluster mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    for (const json& e : j.at("corpora")) {
      CorpusEntry entry;
      entry.name = e.at("name").get<std::string>();
      entry.path = resolve(base_dir, e.at("path").get<std::string>());
      if (e.contains("vectors") && !e.at("vectors").is_null()) {
        entry.vectors = resolve(base_dir, e.at("vectors").get<std::string>());
      }
      entry.split = SplitSpec::from_json_text(e.at("split").dump());
      entry.folds_by_topic = e.value("folds_by", std::string("subtopic")) == "topic";
      c.corpora.push_back(std::move(entry));
    }
    if (j.contains("sampler")) {
      const json& s = j.at("sampler");
      c.sampler.c = s.value("c", c.sampler.c);
      c.sampler.k = s.value("k", c.sampler.k);
      c.sampler.seed = s.value("seed", c.sampler.seed);
    }
    if (j.contains("features")) c.features = toggles_from_json(j.at("features"));
    const json learner = j.value("learner", json::object());
    c.learner = learner_from_json(learner.value("params", json::object()),
                                  learner_from_json({{"kind", learner.value("kind", "gbt")}}));
    c.learner_space = learner.contains("space") ? space_from_json(learner.at("space"))
                                                : default_learner_space(c.learner.kind);
    const json clustering = j.value("clustering", json::object());
    c.clustering = cluster_config_from_json(clustering);
    c.clustering_space = clustering.contains("space") ? space_from_json(clustering.at("space"))
                                                      : default_clustering_space();
    if (j.contains("tuning")) {
      const json& t = j.at("tuning");
      c.tuning.classifier_trials = t.value("classifier_trials", c.tuning.classifier_trials);
      c.tuning.clustering_trials = t.value("clustering_trials", c.tuning.clustering_trials);
      c.tuning.folds = t.value("folds", c.tuning.folds);
      c.tuning.repeats = t.value("repeats", c.tuning.repeats);
      c.tuning.seed = t.value("seed", c.tuning.seed);
    }
    c.rfe = j.value("rfe", true);
    c.precluster = precluster_mode_from_string(j.value("precluster", std::string("none")));
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("mask") && !j.at("mask").is_null()) c.mask = MaskSpec::from_json(j.at("mask"));
    c.threshold = j.value("threshold", c.threshold);
    c.threads = j.value("threads", 0u);
    if (j.contains("cross_dataset")) {
      const json& x = j.at("cross_dataset");
      c.cross_train = x.at("train").get<std::vector<std::vector<std::string>>>();
      c.cross_test = x.at("test").get<std::vector<std::string>>();
    }
    if (j.contains("out_dir")) c.out_dir = resolve(base_dir, j.at("out_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path.string() + "': " + e.what());
  }
  return from_json(j, path.parent_path());
}

namespace {

json split_to_json(const SplitSpec& spec) {
  const char* parts[] = {"train", "dev", "test"};
  json j;
  switch (spec.mode) {
    case SplitSpec::Mode::percent:
      j["mode"] = "percent";
      for (int i = 0; i < 3; ++i) j[parts[i]] = spec.percent[i];
      j["seed"] = spec.seed;
      return j;
    case SplitSpec::Mode::by_topic:
      j["mode"] = "by_topic";
      if (spec.group_by_subtopic) j["field"] = "subtopic";
      break;
    case SplitSpec::Mode::explicit_lists:
      j["mode"] = "explicit";
      break;
  }
  for (int i = 0; i < 3; ++i) j[parts[i]] = spec.members[i];
  return j;
}

}  // namespace

json ExperimentConfig::to_json() const {
  json corpora_json = json::array();
  for (const CorpusEntry& e : corpora) {
    corpora_json.push_back({{"name", e.name},
                            {"path", e.path.filename().string()},
                            {"vectors", e.vectors ? json(e.vectors->filename().string()) : json()},
                            {"split", split_to_json(e.split)},
                            {"folds_by", e.folds_by_topic ? "topic" : "subtopic"}});
  }
  std::vector<std::string> families;
  for (FeatureFamily f : kFeatureFamilies) {
    if (features.on(f)) families.emplace_back(to_string(f));
  }
  json learner_json = learner_to_json(learner);
  json clustering_json = cluster_config_to_json(clustering);
  clustering_json["space"] = space_to_json(clustering_space);
  return {{"corpora", corpora_json},
          {"sampler", {{"c", sampler.c}, {"k", sampler.k}, {"seed", sampler.seed}}},
          {"features", {{"families", families}}},
          {"learner",
           {{"kind", to_string(learner.kind)},
            {"params", learner_json},
            {"space", space_to_json(learner_space)}}},
          {"clustering", clustering_json},
          {"tuning",
           {{"classifier_trials", tuning.classifier_trials},
            {"clustering_trials", tuning.clustering_trials},
            {"folds", tuning.folds},
            {"repeats", tuning.repeats},
            {"seed", tuning.seed}}},
          {"rfe", rfe},
          {"precluster", to_string(precluster)},
          {"seeds", seeds},
          {"mask", mask ? mask->to_json() : json()},
          {"threshold", threshold},
          {"cross_dataset", {{"train", cross_train}, {"test", cross_test}}}};
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void ExperimentConfig::validate() const {
  if (corpora.empty()) throw ValidationError("experiment config lists no corpora");
  if (seeds.empty()) throw ValidationError("experiment config needs at least one seed");
  std::set<std::string> names;
  for (const CorpusEntry& e : corpora) {
    if (!names.insert(e.name).second) throw ValidationError("duplicate corpus name '" + e.name + "'");
    if (!std::filesystem::exists(e.path)) throw IoError("corpus file '" + e.path.string() + "' not found");
    if (e.vectors && !std::filesystem::exists(*e.vectors)) {
      throw IoError("vector file '" + e.vectors->string() + "' not found");
    }
  }
  for (const auto& source : cross_train) {
    if (source.empty()) throw ValidationError("empty cross-dataset training source");
    for (const auto& n : source) {
      if (!names.count(n)) throw NotFoundError("cross-dataset corpus '" + n + "' is not configured");
    }
  }
  for (const auto& n : cross_test) {
    if (!names.count(n)) throw NotFoundError("cross-dataset corpus '" + n + "' is not configured");
  }
  sampler.validate();
  clustering.validate();
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
  if (tuning.classifier_trials <= 0 || tuning.clustering_trials <= 0) {
    throw ValidationError("tuning budgets must be positive");
  }
}

// ---------------------------------------------------------------------------
// Pipeline

PreparedCorpus prepare_corpus(const CorpusEntry& entry, const ExperimentConfig& config) {
  return stage("prepare", [&] {
    PreparedCorpus p;
    p.name = entry.name;
    p.folds_by_topic = entry.folds_by_topic;
    Corpus corpus = drop_superimposed(load_corpus(entry.path));
    if (entry.vectors) p.vectors = VectorStore::load(*entry.vectors);
    if (config.mask) {
      MaskResult masked = mask_corpus(corpus, *config.mask);
      corpus = std::move(masked.corpus);
      p.vectors = p.vectors.without(std::unordered_set<std::string>(masked.masked_actions.begin(),
                                                                    masked.masked_actions.end()));
    }
    p.splits = split_corpus(corpus, entry.split);
    return p;
  });
}

TrainedSystem train_system(const std::string& name, const Corpus& train, const Corpus& dev,
                           const VectorStore& vectors, bool folds_by_topic,
                           const ExperimentConfig& config,
                           const std::optional<std::vector<std::string>>& fixed_schema) {
  TrainedSystem sys;
  sys.name = name;
  const FeatureContext train_ctx(train, vectors, config.features);
  const FeatureContext dev_ctx(dev, vectors, config.features);

  const auto [train_data, train_pairs] = stage("sample", [&] {
    const PairSet pairs = sample_pairs(train, config.sampler);
    const FeatureMatrix m = featurize(*train_ctx.extractor, pairs.pairs);
    return std::pair(TrainingData::from(m), m.pairs);
  });
  const TrainingData dev_data = stage("sample-dev", [&] {
    SamplerConfig sc = config.sampler;
    sc.seed = derive_seed(config.sampler.seed, 0xdef);
    return TrainingData::from(featurize(*dev_ctx.extractor, sample_pairs(dev, sc).pairs));
  });

  json selection = json::object();
  sys.schema = stage("select-features", [&] {
    if (fixed_schema) {
      selection["mode"] = "fixed";
      return *fixed_schema;
    }
    if (!config.rfe) {
      selection["mode"] = "all";
      return train_data.names;
    }
    if (dev_data.positives() == 0 || dev_data.positives() == dev_data.size()) {
      selection["mode"] = "all";
      selection["reason"] = "dev pairs lack one class";
      return train_data.names;
    }
    sys.rfe = rfe(train_data, dev_data, config.learner, config.tuning.seed);
    selection["mode"] = "rfe";
    json trace = json::array();
    for (const RfeStep& s : sys.rfe.trace) trace.push_back({{"features", s.features.size()}, {"dev_f1", s.dev_f1}});
    selection["trace"] = trace;
    return sys.rfe.selected;
  });
  const TrainingData data = train_data.select_columns(sys.schema);

  sys.learner = stage("tune-classifier", [&] {
    const auto folds = document_folds(train, folds_by_topic, config.tuning.folds,
                                      config.tuning.repeats, config.tuning.seed);
    std::vector<std::uint32_t> doc_a, doc_b;
    for (const MentionPair& p : train_pairs) {
      doc_a.push_back(train.at(p.a).doc);
      doc_b.push_back(train.at(p.b).doc);
    }
    struct Split {
      TrainingData fit, check;
    };
    std::vector<Split> splits;
    for (const auto& repetition : folds) {
      std::vector<int> fold_of(train.documents().size(), -1);
      for (std::size_t f = 0; f < repetition.size(); ++f) {
        for (std::size_t d : repetition[f]) fold_of[d] = static_cast<int>(f);
      }
      for (std::size_t f = 0; f < repetition.size(); ++f) {
        std::vector<std::size_t> fit, check;
        for (std::size_t i = 0; i < data.size(); ++i) {
          const bool a_in = fold_of[doc_a[i]] == static_cast<int>(f);
          const bool b_in = fold_of[doc_b[i]] == static_cast<int>(f);
          if (a_in && b_in) check.push_back(i);
          else if (!a_in && !b_in) fit.push_back(i);
        }
        Split s{data.select_rows(fit), data.select_rows(check)};
        const auto fp = s.fit.positives();
        if (fp == 0 || fp == s.fit.size() || s.check.positives() == 0) continue;
        splits.push_back(std::move(s));
      }
    }
    const TuneResult result = tune(
        config.learner_space, config.tuning.classifier_trials, config.tuning.seed,
        [&](const json& params) {
          if (splits.empty()) return 0.0;
          const LearnerConfig lc = learner_from_json(params, config.learner);
          double total = 0.0;
          for (const Split& s : splits) {
            const PairModel m = cdcr::train(s.fit, lc, config.tuning.seed);
            std::vector<double> probs;
            for (const FeatureVector& row : s.check.rows) probs.push_back(m.predict_proba(row));
            total += pair_f1(probs, s.check.labels, config.threshold);
          }
          return total / static_cast<double>(splits.size());
        });
    sys.classifier_tuning = {{"best", result.best},
                             {"best_score", result.best_score ? json(*result.best_score) : json()},
                             {"trials", result.trials.size()},
                             {"folds_used", splits.size()},
                             {"selection", selection}};
    return learner_from_json(result.best, config.learner);
  });

  stage("train", [&] {
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
      const std::uint64_t seed = config.seeds[i];
      SamplerConfig sc = config.sampler;
      sc.seed = derive_seed(config.sampler.seed, seed);
      const PairSet pairs = sample_pairs(train, sc);
      const TrainingData d =
          TrainingData::from(featurize(*train_ctx.extractor, pairs.pairs)).select_columns(sys.schema);
      sys.models.push_back(cdcr::train(d, sys.learner, seed));
      sys.pair_provenance.push_back(pairs.provenance);
    }
    sys.importance = sys.learner.kind == LearnerKind::gradient_boosted_trees
                         ? gain_importance(sys.models.front())
                         : coefficient_importance(sys.models.front(), data);
  });

  sys.clustering = stage("tune-clustering", [&] {
    if (train.actions().size() < 2) return config.clustering;
    const auto& refs = train.actions();
    const DistanceBuild dm =
        build_distance_matrix(sys.models.front(), *train_ctx.extractor, refs, nullptr, config.threads);
    const Clustering gold = gold_clustering(train);
    const TuneResult result = tune(config.clustering_space, config.tuning.clustering_trials,
                                   derive_seed(config.tuning.seed, 0xc1), [&](const json& params) {
                                     const ClusterConfig cc =
                                         cluster_config_from_json(params, config.clustering);
                                     if (cc.criterion == Criterion::maxclust &&
                                         cc.max_clusters > dm.matrix.size()) {
                                       return 0.0;
                                     }
                                     return lea(gold, agglomerative(dm.matrix, cc)).f1;
                                   });
    sys.clustering_tuning = {{"best", result.best},
                             {"best_score", result.best_score ? json(*result.best_score) : json()},
                             {"trials", result.trials.size()}};
    return cluster_config_from_json(result.best, config.clustering);
  });
  return sys;
}

Prediction predict_corpus(const PairModel& model, const ClusterConfig& clustering,
                          const Corpus& corpus, const VectorStore& vectors,
                          const FeatureToggles& features, PreclusterMode mode,
                          std::uint64_t seed, unsigned threads) {
  Prediction out;
  const auto& refs = corpus.actions();
  if (refs.size() < 2) {
    std::vector<std::string> keys;
    for (MentionRef r : refs) keys.push_back(corpus.key(r));
    out.response = Clustering::from_labels(keys, keys);
    return out;
  }
  const FeatureContext ctx(corpus, vectors, features);
  std::optional<std::vector<std::size_t>> groups;
  if (mode == PreclusterMode::gold) {
    groups = mention_groups(corpus, gold_preclusters(corpus), refs);
  } else if (mode == PreclusterMode::kmeans) {
    groups = mention_groups(corpus, kmeans_precluster(corpus, ctx.tfidf, seed).clustering, refs);
  }
  const DistanceBuild dm =
      build_distance_matrix(model, *ctx.extractor, refs, groups ? &*groups : nullptr, threads);
  ClusterConfig cc = clustering;
  if (cc.criterion == Criterion::maxclust) cc.max_clusters = std::min(cc.max_clusters, refs.size());
  out.response = agglomerative(dm.matrix, cc, groups ? &*groups : nullptr);
  out.classifier_calls = dm.predictions;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dm.matrix.ids().size(); ++i) index.emplace(dm.matrix.ids()[i], i);
  out.pairs = all_pairs(corpus);
  out.probabilities.reserve(out.pairs.size());
  for (const MentionPair& p : out.pairs) {
    out.probabilities.push_back(1.0 - dm.matrix.at(index.at(p.a), index.at(p.b)));
  }
  return out;
}

RunReport evaluate_system(const TrainedSystem& system, const std::string& test_name,
                          const Corpus& test, const VectorStore& vectors,
                          const ExperimentConfig& config) {
  return stage("evaluate", [&] {
    RunReport r;
    r.train_name = system.name;
    r.test_name = test_name;
    r.seeds = config.seeds;
    r.schema = system.schema;
    r.importance = system.importance;
    std::vector<double> pooled_probs;
    std::vector<MentionPair> pooled_pairs;
    std::vector<std::uint64_t> calls;
    for (std::size_t i = 0; i < system.models.size(); ++i) {
      const Prediction p = predict_corpus(system.models[i], system.clustering, test, vectors,
                                          config.features, config.precluster, config.tuning.seed,
                                          config.threads);
      r.per_seed.push_back(cross_document_score(test, p.response));
      r.model_hashes.push_back(system.models[i].hash());
      pooled_probs.insert(pooled_probs.end(), p.probabilities.begin(), p.probabilities.end());
      pooled_pairs.insert(pooled_pairs.end(), p.pairs.begin(), p.pairs.end());
      calls.push_back(p.classifier_calls);
    }
    r.mean = mean_report(r.per_seed);
    r.link_types = evaluate_by_link_type(pooled_probs, pooled_pairs, config.threshold);
    r.lemma_baseline = cross_document_score(test, lemma_baseline(test));
    json pairs = json::array();
    for (const auto& p : system.pair_provenance) pairs.push_back(provenance_json(p));
    r.provenance = {{"version", kVersion},
                    {"config_hash", hex(config.hash())},
                    {"precluster", to_string(config.precluster)},
                    {"threshold", config.threshold},
                    {"learner", learner_to_json(system.learner)},
                    {"clustering", cluster_config_to_json(system.clustering)},
                    {"classifier_tuning", system.classifier_tuning},
                    {"clustering_tuning", system.clustering_tuning},
                    {"training_pairs", pairs},
                    {"classifier_calls", calls}};
    return r;
  });
}

json RunReport::to_json() const {
  json per_seed_json = json::array();
  for (const auto& m : per_seed) per_seed_json.push_back(metric_json(m));
  json links = json::object();
  for (std::size_t t = 0; t < 4; ++t) {
    links[std::string(cdcr::to_string(kLinkTypes[t]))] = scores_json(link_types.by_type[t]);
  }
  links["all"] = scores_json(link_types.overall);
  json importance_json = json::array();
  for (const auto& [name, v] : importance.entries) importance_json.push_back({name, v});
  std::vector<std::string> hashes;
  for (auto h : model_hashes) hashes.push_back(hex(h));
  return {{"train", train_name},
          {"test", test_name},
          {"seeds", seeds},
          {"per_seed", per_seed_json},
          {"mean", metric_json(mean)},
          {"lemma_baseline", metric_json(lemma_baseline)},
          {"link_types", links},
          {"importance", importance_json},
          {"schema", schema},
          {"model_hashes", hashes},
          {"provenance", provenance}};
}

RunReport run_in_dataset(const ExperimentConfig& config) {
  config.validate();
  const CorpusEntry& entry = config.corpora.front();
  const PreparedCorpus p = prepare_corpus(entry, config);
  const TrainedSystem system = train_system(entry.name, p.splits.train, p.splits.dev, p.vectors,
                                            p.folds_by_topic, config);
  return evaluate_system(system, entry.name, p.splits.test, p.vectors, config);
}

CrossDatasetReport run_cross_dataset(const ExperimentConfig& config) {
  config.validate();
  if (config.cross_train.empty() || config.cross_test.empty()) {
    throw ValidationError("cross-dataset run needs training sources and test corpora");
  }
  std::map<std::string, PreparedCorpus> prepared;
  for (const CorpusEntry& e : config.corpora) {
    bool used = std::find(config.cross_test.begin(), config.cross_test.end(), e.name) !=
                config.cross_test.end();
    for (const auto& s : config.cross_train) used |= std::find(s.begin(), s.end(), e.name) != s.end();
    if (used) prepared.emplace(e.name, prepare_corpus(e, config));
  }

  std::map<std::string, TrainedSystem> singles;
  auto single = [&](const std::string& name) -> const TrainedSystem& {
    auto it = singles.find(name);
    if (it == singles.end()) {
      const PreparedCorpus& p = prepared.at(name);
      it = singles.emplace(name, train_system(name, p.splits.train, p.splits.dev, p.vectors,
                                              p.folds_by_topic, config))
               .first;
    }
    return it->second;
  };

  CrossDatasetReport report;
  for (const auto& source : config.cross_train) {
    std::optional<TrainedSystem> joint;
    const TrainedSystem* system = nullptr;
    if (source.size() == 1) {
      system = &single(source.front());
    } else {
      std::vector<std::vector<std::string>> schemas;
      std::vector<Corpus> trains, devs;
      std::vector<VectorStore> stores;
      bool by_topic = false;
      std::string name;
      for (const std::string& n : source) {
        schemas.push_back(single(n).schema);
        const PreparedCorpus& p = prepared.at(n);
        trains.emplace_back(n, p.splits.train.documents());
        devs.emplace_back(n, p.splits.dev.documents());
        stores.push_back(p.vectors.namespaced(n + ":"));
        by_topic |= p.folds_by_topic;
        name += (name.empty() ? "" : "+") + n;
      }
      const VectorStore merged_vectors = stage("merge", [&] { return VectorStore::merge(stores); });
      joint = train_system(name, merge_corpora(trains), merge_corpora(devs), merged_vectors,
                           by_topic, config, union_schema(config.features, schemas));
      system = &*joint;
    }
    std::vector<std::uint64_t> hashes;
    for (const PairModel& m : system->models) hashes.push_back(m.hash());
    std::vector<RunReport> row;
    std::vector<Score> leas;
    for (const std::string& test : config.cross_test) {
      const PreparedCorpus& p = prepared.at(test);
      RunReport r = evaluate_system(*system, test, p.splits.test, p.vectors, config);
      if (r.model_hashes != hashes) {
        throw Error(ErrorCode::runtime, "model changed between test corpora for source '" +
                                            system->name + "'");
      }
      leas.push_back(r.mean.lea);
      row.push_back(std::move(r));
    }
    report.lea_harmonic.push_back(harmonic_aggregate(leas));
    report.selected_features.push_back(system->schema);
    report.runs.push_back(std::move(row));
  }
  return report;
}

json CrossDatasetReport::to_json() const {
  json rows = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    json tests = json::array();
    for (const RunReport& r : runs[i]) tests.push_back(r.to_json());
    const Score& h = lea_harmonic[i];
    rows.push_back({{"train", runs[i].empty() ? "" : runs[i].front().train_name},
                    {"selected_features", selected_features[i]},
                    {"runs", tests},
                    {"lea_harmonic_mean", {{"P", h.precision}, {"R", h.recall}, {"F1", h.f1}}}});
  }
  return {{"sources", rows}};
}

std::string CrossDatasetReport::to_tsv() const {
  std::ostringstream out;
  out << "train";
  if (!runs.empty()) {
    for (const RunReport& r : runs.front()) out << '\t' << r.test_name << "_LEA_P\t" << r.test_name << "_LEA_R\t" << r.test_name << "_LEA_F1";
  }
  out << "\tHM_LEA_P\tHM_LEA_R\tHM_LEA_F1\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out << (runs[i].empty() ? "" : runs[i].front().train_name);
    for (const RunReport& r : runs[i]) {
      out << '\t' << 100 * r.mean.lea.precision << '\t' << 100 * r.mean.lea.recall << '\t'
          << 100 * r.mean.lea.f1;
    }
    const Score& h = lea_harmonic[i];
    out << '\t' << 100 * h.precision << '\t' << 100 * h.recall << '\t' << 100 * h.f1 << '\n';
  }
  return out.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

void write_run_report(const RunReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "report.json", report.to_json().dump(2) + "\n");
  std::vector<std::pair<std::string, MetricReport>> rows;
  for (std::size_t i = 0; i < report.per_seed.size(); ++i) {
    rows.emplace_back("seed-" + std::to_string(report.seeds.at(i)), report.per_seed[i]);
  }
  rows.emplace_back("mean", report.mean);
  rows.emplace_back("lemma-baseline", report.lemma_baseline);
  write_text(out_dir / "metrics.tsv", metric_table_tsv(rows));
  write_text(out_dir / "link_types.tsv", report.link_types.to_tsv());
  write_text(out_dir / "importance.tsv", report.importance.to_tsv());
}

void write_cross_report(const CrossDatasetReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "cross_report.json", report.to_json().dump(2) + "\n");
  write_text(out_dir / "cross_lea.tsv", report.to_tsv());
}

}  // namespace cdcr
