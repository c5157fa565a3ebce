#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "cdcr/cdcr.h"
#include "cdcr/harness.hpp"
#include "cdcr/version.hpp"

using nlohmann::json;

struct cdcr_corpus {
  cdcr::Corpus value;
};
struct cdcr_vectors {
  cdcr::VectorStore value;
};
struct cdcr_pairs {
  cdcr::PairSet value;
};
struct cdcr_features {
  cdcr::FeatureMatrix value;
};
struct cdcr_model {
  cdcr::PairModel value;
};
struct cdcr_partition {
  cdcr::Clustering value;
};

namespace {

thread_local std::string g_error;

template <class F>
cdcr_status guard(F&& f) {
  try {
    f();
    g_error.clear();
    return CDCR_OK;
  } catch (const cdcr::Error& e) {
    g_error = e.what();
    return static_cast<cdcr_status>(e.code());
  } catch (const json::exception& e) {
    g_error = e.what();
    return CDCR_E_SCHEMA;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return CDCR_E_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return CDCR_E_INTERNAL;
  } catch (...) {
    g_error = "unknown failure";
    return CDCR_E_INTERNAL;
  }
}

template <class T>
const T& need(const T* p, const char* what) {
  if (!p) throw cdcr::InvalidArgument(std::string(what) + " is null");
  return *p;
}

const char* need_str(const char* s, const char* what) {
  if (!s) throw cdcr::InvalidArgument(std::string(what) + " is null");
  return s;
}

template <class T>
void need_out(T** out) {
  if (!out) throw cdcr::InvalidArgument("output pointer is null");
  *out = nullptr;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json(const char* text, const char* what) {
  try {
    return json::parse(need_str(text, what));
  } catch (const json::parse_error& e) {
    throw cdcr::ParseError(std::string(what) + ": " + e.what());
  }
}

cdcr::FeatureToggles toggles(const char* families_json) {
  if (!families_json) return {};
  const json j = parse_json(families_json, "feature families");
  if (!j.is_array()) throw cdcr::SchemaError("feature families must be a JSON array");
  std::vector<cdcr::FeatureFamily> families;
  for (const auto& f : j) families.push_back(cdcr::feature_family_from_string(f.get<std::string>()));
  return cdcr::FeatureToggles::only(families);
}

cdcr::LearnerConfig learner(const char* learner_json) {
  return learner_json ? cdcr::learner_from_json(parse_json(learner_json, "learner"))
                      : cdcr::LearnerConfig{};
}

json counts(const std::array<std::uint64_t, 4>& a) {
  json j = json::object();
  for (std::size_t t = 0; t < 4; ++t) j[std::string(cdcr::to_string(cdcr::kLinkTypes[t]))] = a[t];
  return j;
}

cdcr::ExperimentConfig load_config(const char* path, const char* overrides_json) {
  cdcr::ExperimentConfig c = cdcr::ExperimentConfig::load(need_str(path, "config path"));
  if (!overrides_json) return c;
  const json o = parse_json(overrides_json, "overrides");
  if (o.contains("seed")) {
    const auto seed = o.at("seed").get<std::uint64_t>();
    c.sampler.seed = seed;
    c.tuning.seed = seed;
  }
  if (o.contains("out_dir")) c.out_dir = o.at("out_dir").get<std::string>();
  if (o.contains("precluster")) {
    c.precluster = cdcr::precluster_mode_from_string(o.at("precluster").get<std::string>());
  }
  c.validate();
  return c;
}

}  // namespace

extern "C" {

const char* cdcr_version(void) { return cdcr::kVersion; }

const char* cdcr_last_error(void) { return g_error.c_str(); }

const char* cdcr_status_name(cdcr_status status) {
  switch (status) {
    case CDCR_OK: return "ok";
    case CDCR_E_INVALID_ARGUMENT: return "invalid argument";
    case CDCR_E_PARSE: return "parse error";
    case CDCR_E_VALIDATION: return "validation error";
    case CDCR_E_IO: return "i/o error";
    case CDCR_E_NOT_FOUND: return "not found";
    case CDCR_E_SCHEMA: return "schema error";
    case CDCR_E_RUNTIME: return "runtime error";
    case CDCR_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void cdcr_string_free(char* s) { std::free(s); }

// corpus

cdcr_status cdcr_corpus_load(const char* path, cdcr_corpus** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_corpus{cdcr::load_corpus(need_str(path, "path"))};
  });
}

cdcr_status cdcr_corpus_parse(const char* json_text, cdcr_corpus** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_corpus{cdcr::parse_corpus(need_str(json_text, "corpus text"))};
  });
}

cdcr_status cdcr_corpus_save(const cdcr_corpus* corpus, const char* path) {
  return guard([&] { cdcr::save_corpus(need(corpus, "corpus").value, need_str(path, "path")); });
}

void cdcr_corpus_free(cdcr_corpus* corpus) { delete corpus; }

cdcr_status cdcr_corpus_stats_json(const cdcr_corpus* corpus, char** out) {
  return guard([&] {
    need_out(out);
    const cdcr::StatsReport s = cdcr::corpus_stats(need(corpus, "corpus").value);
    const json j = {{"topics", s.topics},
                    {"subtopics", s.subtopics},
                    {"documents", s.documents},
                    {"sentences", s.sentences},
                    {"event_mentions", s.event_mentions},
                    {"clusters", s.clusters},
                    {"singletons", s.singletons},
                    {"coreferring_links", counts(s.coreferring_links)},
                    {"non_coreferring_pairs", counts(s.non_coreferring_pairs)},
                    {"total_links", s.total_links()}};
    *out = dup(j.dump(2));
  });
}

cdcr_status cdcr_corpus_action_count(const cdcr_corpus* corpus, size_t* out) {
  return guard([&] {
    if (!out) throw cdcr::InvalidArgument("output pointer is null");
    *out = need(corpus, "corpus").value.actions().size();
  });
}

cdcr_status cdcr_corpus_split(const cdcr_corpus* corpus, const char* spec_json, cdcr_corpus** train,
                              cdcr_corpus** dev, cdcr_corpus** test) {
  return guard([&] {
    need_out(train);
    need_out(dev);
    need_out(test);
    cdcr::CorpusSplits s = cdcr::split_corpus(
        need(corpus, "corpus").value, cdcr::SplitSpec::from_json_text(need_str(spec_json, "split spec")));
    auto a = std::make_unique<cdcr_corpus>(cdcr_corpus{std::move(s.train)});
    auto b = std::make_unique<cdcr_corpus>(cdcr_corpus{std::move(s.dev)});
    auto c = std::make_unique<cdcr_corpus>(cdcr_corpus{std::move(s.test)});
    *train = a.release();
    *dev = b.release();
    *test = c.release();
  });
}

cdcr_status cdcr_corpus_merge(const cdcr_corpus* const* corpora, size_t n, cdcr_corpus** out) {
  return guard([&] {
    need_out(out);
    if (!corpora || n == 0) throw cdcr::InvalidArgument("no corpora to merge");
    std::vector<cdcr::Corpus> parts;
    for (size_t i = 0; i < n; ++i) parts.push_back(need(corpora[i], "corpus").value);
    *out = new cdcr_corpus{cdcr::merge_corpora(parts)};
  });
}

cdcr_status cdcr_corpus_drop_superimposed(const cdcr_corpus* corpus, cdcr_corpus** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_corpus{cdcr::drop_superimposed(need(corpus, "corpus").value)};
  });
}

cdcr_status cdcr_corpus_mask(const cdcr_corpus* corpus, const char* spec_json, cdcr_corpus** out,
                             char** masked_keys) {
  return guard([&] {
    need_out(out);
    if (masked_keys) *masked_keys = nullptr;
    const cdcr::MaskSpec spec = cdcr::MaskSpec::from_json(parse_json(spec_json, "mask spec"));
    cdcr::MaskResult r = cdcr::mask_corpus(need(corpus, "corpus").value, spec);
    char* keys = masked_keys ? dup(json(r.masked_actions).dump()) : nullptr;
    *out = new cdcr_corpus{std::move(r.corpus)};
    if (masked_keys) *masked_keys = keys;
  });
}

cdcr_status cdcr_link_type(const cdcr_corpus* corpus, const char* key_a, const char* key_b,
                           const char** out) {
  return guard([&] {
    need_out(out);
    const cdcr::LinkType t = cdcr::link_type(need(corpus, "corpus").value, need_str(key_a, "key"),
                                             need_str(key_b, "key"));
    *out = cdcr::to_string(t).data();
  });
}

// vectors

cdcr_status cdcr_vectors_load(const char* path, cdcr_vectors** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_vectors{cdcr::VectorStore::load(need_str(path, "path"))};
  });
}

void cdcr_vectors_free(cdcr_vectors* vectors) { delete vectors; }

// pairs

cdcr_status cdcr_pairs_sample(const cdcr_corpus* corpus, double c, int k, uint64_t seed,
                              cdcr_pairs** out) {
  return guard([&] {
    need_out(out);
    cdcr::SamplerConfig config;
    config.c = c;
    config.k = k;
    config.seed = seed;
    *out = new cdcr_pairs{cdcr::sample_pairs(need(corpus, "corpus").value, config)};
  });
}

cdcr_status cdcr_pairs_all(const cdcr_corpus* corpus, cdcr_pairs** out) {
  return guard([&] {
    need_out(out);
    const cdcr::Corpus& c = need(corpus, "corpus").value;
    cdcr::PairSet set;
    set.pairs = cdcr::all_pairs(c);
    set.provenance.corpus_id = c.id();
    for (const cdcr::MentionPair& p : set.pairs) {
      auto& bucket = p.coreferring ? set.provenance.positives : set.provenance.negatives;
      ++bucket[static_cast<std::size_t>(p.link_type)];
    }
    *out = new cdcr_pairs{std::move(set)};
  });
}

cdcr_status cdcr_pairs_save(const cdcr_pairs* pairs, const char* path) {
  return guard([&] { cdcr::save_pairs(need(pairs, "pairs").value, need_str(path, "path")); });
}

cdcr_status cdcr_pairs_load(const char* path, cdcr_pairs** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_pairs{cdcr::load_pairs(need_str(path, "path"))};
  });
}

cdcr_status cdcr_pairs_count(const cdcr_pairs* pairs, size_t* out) {
  return guard([&] {
    if (!out) throw cdcr::InvalidArgument("output pointer is null");
    *out = need(pairs, "pairs").value.pairs.size();
  });
}

cdcr_status cdcr_pairs_provenance_json(const cdcr_pairs* pairs, char** out) {
  return guard([&] {
    need_out(out);
    const auto& p = need(pairs, "pairs").value.provenance;
    const json j = {{"corpus_id", p.corpus_id},
                    {"c", p.config.c},
                    {"k", p.config.k},
                    {"seed", p.config.seed},
                    {"positives", counts(p.positives)},
                    {"negatives", counts(p.negatives)},
                    {"negative_targets", counts(p.negative_targets)},
                    {"negative_pool", counts(p.negative_pool)},
                    {"negatives_nondecreasing", p.negatives_nondecreasing}};
    *out = dup(j.dump(2));
  });
}

void cdcr_pairs_free(cdcr_pairs* pairs) { delete pairs; }

// features

cdcr_status cdcr_features_compute(const cdcr_corpus* corpus, const cdcr_vectors* vectors,
                                  const char* families_json, const cdcr_pairs* pairs,
                                  cdcr_features** out) {
  return guard([&] {
    need_out(out);
    const cdcr::Corpus& c = need(corpus, "corpus").value;
    const cdcr::TfIdfModel tfidf = cdcr::TfIdfModel::fit(c);
    const cdcr::FeatureExtractor extractor(c, tfidf, vectors ? &vectors->value : nullptr,
                                           toggles(families_json));
    *out = new cdcr_features{cdcr::featurize(extractor, need(pairs, "pairs").value.pairs)};
  });
}

cdcr_status cdcr_features_save_jsonl(const cdcr_features* features, const char* path) {
  return guard([&] {
    cdcr::save_features_jsonl(need(features, "features").value, need_str(path, "path"));
  });
}

cdcr_status cdcr_features_save_binary(const cdcr_features* features, const char* path) {
  return guard([&] {
    cdcr::save_features_binary(need(features, "features").value, need_str(path, "path"));
  });
}

cdcr_status cdcr_features_load_jsonl(const char* path, cdcr_features** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_features{cdcr::load_features_jsonl(need_str(path, "path"))};
  });
}

cdcr_status cdcr_features_count(const cdcr_features* features, size_t* rows, size_t* columns) {
  return guard([&] {
    const auto& m = need(features, "features").value;
    if (rows) *rows = m.size();
    if (columns) *columns = m.names.size();
  });
}

void cdcr_features_free(cdcr_features* features) { delete features; }

// models

cdcr_status cdcr_model_train(const cdcr_features* features, const char* learner_json,
                             uint64_t seed, cdcr_model** out) {
  return guard([&] {
    need_out(out);
    const auto data = cdcr::TrainingData::from(need(features, "features").value);
    *out = new cdcr_model{cdcr::train(data, learner(learner_json), seed)};
  });
}

cdcr_status cdcr_model_save(const cdcr_model* model, const char* path) {
  return guard([&] { need(model, "model").value.save(need_str(path, "path")); });
}

cdcr_status cdcr_model_load(const char* path, cdcr_model** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_model{cdcr::PairModel::load(need_str(path, "path"))};
  });
}

cdcr_status cdcr_model_hash(const cdcr_model* model, uint64_t* out) {
  return guard([&] {
    if (!out) throw cdcr::InvalidArgument("output pointer is null");
    *out = need(model, "model").value.hash();
  });
}

cdcr_status cdcr_model_importance_tsv(const cdcr_model* model, const cdcr_features* features,
                                      char** out) {
  return guard([&] {
    need_out(out);
    const cdcr::PairModel& m = need(model, "model").value;
    if (m.kind() == cdcr::LearnerKind::gradient_boosted_trees) {
      *out = dup(cdcr::gain_importance(m).to_tsv());
    } else {
      const auto data = cdcr::TrainingData::from(need(features, "features").value);
      *out = dup(cdcr::coefficient_importance(m, data).to_tsv());
    }
  });
}

cdcr_status cdcr_model_predict_proba(const cdcr_model* model, const cdcr_features* features,
                                     double* out, size_t n) {
  return guard([&] {
    const auto& f = need(features, "features").value;
    if (!out || n < f.size()) throw cdcr::InvalidArgument("output buffer too small");
    const std::vector<double> p = need(model, "model").value.predict_proba(f);
    std::copy(p.begin(), p.end(), out);
  });
}

cdcr_status cdcr_predict(const cdcr_model* model, const cdcr_features* features, const char* path) {
  return guard([&] {
    const auto& f = need(features, "features").value;
    const std::vector<double> p = need(model, "model").value.predict_proba(f);
    std::ofstream file(need_str(path, "path"), std::ios::binary);
    if (!file) throw cdcr::IoError(std::string("cannot write '") + path + "'");
    for (std::size_t i = 0; i < f.size(); ++i) {
      const cdcr::MentionPair& pair = f.pairs.at(i);
      file << json{{"a", pair.a},
                   {"b", pair.b},
                   {"link_type", cdcr::to_string(pair.link_type)},
                   {"label", pair.coreferring ? 1 : 0},
                   {"probability", p[i]}}
                  .dump()
           << '\n';
    }
  });
}

cdcr_status cdcr_link_type_report(const cdcr_model* model, const cdcr_features* features,
                                  double threshold, char** out) {
  return guard([&] {
    need_out(out);
    *out = dup(cdcr::evaluate_by_link_type(need(model, "model").value,
                                           need(features, "features").value, threshold)
                   .to_tsv());
  });
}

void cdcr_model_free(cdcr_model* model) { delete model; }

cdcr_status cdcr_select_features(const cdcr_features* train, const cdcr_features* dev,
                                 const char* learner_json, uint64_t seed, char** out) {
  return guard([&] {
    need_out(out);
    const auto t = cdcr::TrainingData::from(need(train, "train features").value);
    const auto d = cdcr::TrainingData::from(need(dev, "dev features").value);
    const cdcr::RfeResult r = cdcr::rfe(t, d, learner(learner_json), seed);
    json trace = json::array();
    for (const auto& s : r.trace) trace.push_back({{"features", s.features}, {"dev_f1", s.dev_f1}});
    *out = dup(json{{"selected", r.selected}, {"trace", trace}}.dump(2));
  });
}

// clustering

cdcr_status cdcr_cluster(const cdcr_model* model, const cdcr_corpus* corpus,
                         const cdcr_vectors* vectors, const char* families_json,
                         const char* cluster_json, const char* precluster, uint64_t seed,
                         unsigned threads, cdcr_partition** out) {
  return guard([&] {
    need_out(out);
    const cdcr::ClusterConfig cc =
        cluster_json ? cdcr::cluster_config_from_json(parse_json(cluster_json, "clustering"))
                     : cdcr::ClusterConfig{};
    const auto mode = cdcr::precluster_mode_from_string(precluster ? precluster : "none");
    static const cdcr::VectorStore empty;
    cdcr::Prediction p = cdcr::predict_corpus(need(model, "model").value, cc,
                                              need(corpus, "corpus").value,
                                              vectors ? vectors->value : empty,
                                              toggles(families_json), mode, seed, threads);
    *out = new cdcr_partition{std::move(p.response)};
  });
}

// partitions

cdcr_status cdcr_partition_gold(const cdcr_corpus* corpus, cdcr_partition** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_partition{cdcr::gold_clustering(need(corpus, "corpus").value)};
  });
}

cdcr_status cdcr_partition_save_json(const cdcr_partition* p, const char* path) {
  return guard([&] { cdcr::save_clustering(need(p, "partition").value, need_str(path, "path")); });
}

cdcr_status cdcr_partition_load_json(const char* path, cdcr_partition** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_partition{cdcr::load_clustering(need_str(path, "path"))};
  });
}

cdcr_status cdcr_partition_save_conll(const cdcr_partition* p, const char* path) {
  return guard([&] { cdcr::save_conll(need(p, "partition").value, need_str(path, "path")); });
}

cdcr_status cdcr_partition_load_conll(const char* path, cdcr_partition** out) {
  return guard([&] {
    need_out(out);
    *out = new cdcr_partition{cdcr::load_conll(need_str(path, "path"))};
  });
}

cdcr_status cdcr_partition_size(const cdcr_partition* p, size_t* clusters, size_t* elements) {
  return guard([&] {
    const auto& c = need(p, "partition").value;
    if (clusters) *clusters = c.size();
    if (elements) *elements = c.element_count();
  });
}

void cdcr_partition_free(cdcr_partition* p) { delete p; }

// scoring

cdcr_status cdcr_score(const cdcr_partition* key, const cdcr_partition* response, char** out) {
  return guard([&] {
    need_out(out);
    *out = dup(cdcr::evaluate(need(key, "key").value, need(response, "response").value).to_json());
  });
}

cdcr_status cdcr_score_corpus(const cdcr_corpus* corpus, const cdcr_partition* response,
                              char** out) {
  return guard([&] {
    need_out(out);
    *out = dup(cdcr::cross_document_score(need(corpus, "corpus").value,
                                          need(response, "response").value)
                   .to_json());
  });
}

// baselines

cdcr_status cdcr_baseline(const cdcr_corpus* corpus, const char* kind, double delta,
                          cdcr_partition** out) {
  return guard([&] {
    need_out(out);
    const auto k = cdcr::baseline_kind_from_string(need_str(kind, "baseline kind"));
    *out = new cdcr_partition{cdcr::run_baseline(need(corpus, "corpus").value, k, delta)};
  });
}

cdcr_status cdcr_baseline_tune(const cdcr_corpus* train, const char* kind, double* delta,
                               double* train_lea_f1) {
  return guard([&] {
    const auto k = cdcr::baseline_kind_from_string(need_str(kind, "baseline kind"));
    const cdcr::BaselineTuning t = cdcr::tune_delta(need(train, "corpus").value, k);
    if (delta) *delta = t.delta;
    if (train_lea_f1) *train_lea_f1 = t.train_lea_f1;
  });
}

// config-driven runs

cdcr_status cdcr_tune(const char* config_path, const char* overrides_json, char** out) {
  return guard([&] {
    need_out(out);
    cdcr::ExperimentConfig config = load_config(config_path, overrides_json);
    config.seeds.resize(1);
    const cdcr::CorpusEntry& entry = config.corpora.front();
    const cdcr::PreparedCorpus p = cdcr::prepare_corpus(entry, config);
    const cdcr::TrainedSystem s = cdcr::train_system(entry.name, p.splits.train, p.splits.dev,
                                                     p.vectors, p.folds_by_topic, config);
    const json j = {{"corpus", entry.name},
                    {"schema", s.schema},
                    {"learner", cdcr::learner_to_json(s.learner)},
                    {"clustering", cdcr::cluster_config_to_json(s.clustering)},
                    {"classifier_tuning", s.classifier_tuning},
                    {"clustering_tuning", s.clustering_tuning}};
    *out = dup(j.dump(2));
  });
}

cdcr_status cdcr_experiment(const char* config_path, const char* mode, const char* overrides_json,
                            char** out) {
  return guard([&] {
    need_out(out);
    const cdcr::ExperimentConfig config = load_config(config_path, overrides_json);
    const std::string m = need_str(mode, "mode");
    json report;
    if (m == "in-dataset") {
      const cdcr::RunReport r = cdcr::run_in_dataset(config);
      if (!config.out_dir.empty()) cdcr::write_run_report(r, config.out_dir);
      report = r.to_json();
    } else if (m == "cross-dataset") {
      const cdcr::CrossDatasetReport r = cdcr::run_cross_dataset(config);
      if (!config.out_dir.empty()) cdcr::write_cross_report(r, config.out_dir);
      report = r.to_json();
    } else {
      throw cdcr::InvalidArgument("unknown experiment mode '" + m + "'");
    }
    *out = dup(report.dump(2));
  });
}

}  // extern "C"
