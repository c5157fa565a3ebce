#ifndef CDCR_H
#define CDCR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CDCR_API __declspec(dllexport)
#else
#define CDCR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdcr_status {
  CDCR_OK = 0,
  CDCR_E_INVALID_ARGUMENT = 1,
  CDCR_E_PARSE = 2,
  CDCR_E_VALIDATION = 3,
  CDCR_E_IO = 4,
  CDCR_E_NOT_FOUND = 5,
  CDCR_E_SCHEMA = 6,
  CDCR_E_RUNTIME = 7,
  CDCR_E_INTERNAL = 8
} cdcr_status;

typedef struct cdcr_corpus cdcr_corpus;
typedef struct cdcr_vectors cdcr_vectors;
typedef struct cdcr_pairs cdcr_pairs;
typedef struct cdcr_features cdcr_features;
typedef struct cdcr_model cdcr_model;
typedef struct cdcr_partition cdcr_partition;

/* Strings returned through char** are owned by the caller: release them with
 * cdcr_string_free. Borrowed const char* results stay valid until the next
 * call on the same thread. */
CDCR_API const char* cdcr_version(void);
CDCR_API const char* cdcr_last_error(void);
CDCR_API const char* cdcr_status_name(cdcr_status status);
CDCR_API void cdcr_string_free(char* s);

/* corpus */
CDCR_API cdcr_status cdcr_corpus_load(const char* path, cdcr_corpus** out);
CDCR_API cdcr_status cdcr_corpus_parse(const char* json_text, cdcr_corpus** out);
CDCR_API cdcr_status cdcr_corpus_save(const cdcr_corpus* corpus, const char* path);
CDCR_API void cdcr_corpus_free(cdcr_corpus* corpus);
CDCR_API cdcr_status cdcr_corpus_stats_json(const cdcr_corpus* corpus, char** out);
CDCR_API cdcr_status cdcr_corpus_action_count(const cdcr_corpus* corpus, size_t* out);
/* spec_json: {"mode":"explicit"|"by_topic"|"percent", ...} */
CDCR_API cdcr_status cdcr_corpus_split(const cdcr_corpus* corpus, const char* spec_json,
                                       cdcr_corpus** train, cdcr_corpus** dev,
                                       cdcr_corpus** test);
CDCR_API cdcr_status cdcr_corpus_merge(const cdcr_corpus* const* corpora, size_t n,
                                       cdcr_corpus** out);
CDCR_API cdcr_status cdcr_corpus_drop_superimposed(const cdcr_corpus* corpus, cdcr_corpus** out);
/* spec_json: {"components":[...],"seed":N}. masked_keys (may be NULL) gets a
 * JSON array of the masked action keys. */
CDCR_API cdcr_status cdcr_corpus_mask(const cdcr_corpus* corpus, const char* spec_json,
                                      cdcr_corpus** out, char** masked_keys);
CDCR_API cdcr_status cdcr_link_type(const cdcr_corpus* corpus, const char* key_a,
                                    const char* key_b, const char** out);

/* embedding sidecar; NULL is accepted wherever vectors are optional */
CDCR_API cdcr_status cdcr_vectors_load(const char* path, cdcr_vectors** out);
CDCR_API void cdcr_vectors_free(cdcr_vectors* vectors);

/* pairs */
CDCR_API cdcr_status cdcr_pairs_sample(const cdcr_corpus* corpus, double c, int k, uint64_t seed,
                                       cdcr_pairs** out);
CDCR_API cdcr_status cdcr_pairs_all(const cdcr_corpus* corpus, cdcr_pairs** out);
CDCR_API cdcr_status cdcr_pairs_save(const cdcr_pairs* pairs, const char* path);
CDCR_API cdcr_status cdcr_pairs_load(const char* path, cdcr_pairs** out);
CDCR_API cdcr_status cdcr_pairs_count(const cdcr_pairs* pairs, size_t* out);
CDCR_API cdcr_status cdcr_pairs_provenance_json(const cdcr_pairs* pairs, char** out);
CDCR_API void cdcr_pairs_free(cdcr_pairs* pairs);

/* features; families_json is a JSON array of family names or NULL for all */
CDCR_API cdcr_status cdcr_features_compute(const cdcr_corpus* corpus, const cdcr_vectors* vectors,
                                           const char* families_json, const cdcr_pairs* pairs,
                                           cdcr_features** out);
CDCR_API cdcr_status cdcr_features_save_jsonl(const cdcr_features* features, const char* path);
CDCR_API cdcr_status cdcr_features_save_binary(const cdcr_features* features, const char* path);
CDCR_API cdcr_status cdcr_features_load_jsonl(const char* path, cdcr_features** out);
CDCR_API cdcr_status cdcr_features_count(const cdcr_features* features, size_t* rows,
                                         size_t* columns);
CDCR_API void cdcr_features_free(cdcr_features* features);

/* models; learner_json: {"kind":"gbt"|"logreg", ...params} */
CDCR_API cdcr_status cdcr_model_train(const cdcr_features* features, const char* learner_json,
                                      uint64_t seed, cdcr_model** out);
CDCR_API cdcr_status cdcr_model_save(const cdcr_model* model, const char* path);
CDCR_API cdcr_status cdcr_model_load(const char* path, cdcr_model** out);
CDCR_API cdcr_status cdcr_model_hash(const cdcr_model* model, uint64_t* out);
/* features is required for linear models (coefficient importance) */
CDCR_API cdcr_status cdcr_model_importance_tsv(const cdcr_model* model,
                                               const cdcr_features* features, char** out);
CDCR_API cdcr_status cdcr_model_predict_proba(const cdcr_model* model,
                                              const cdcr_features* features, double* out,
                                              size_t n);
/* One JSON object per pair: a, b, link_type, label, probability. */
CDCR_API cdcr_status cdcr_predict(const cdcr_model* model, const cdcr_features* features,
                                  const char* path);
/* Pair scores per link type (TSV) at `threshold`. */
CDCR_API cdcr_status cdcr_link_type_report(const cdcr_model* model, const cdcr_features* features,
                                           double threshold, char** out);
CDCR_API void cdcr_model_free(cdcr_model* model);

/* recursive feature elimination; result JSON has "selected" and "trace" */
CDCR_API cdcr_status cdcr_select_features(const cdcr_features* train, const cdcr_features* dev,
                                          const char* learner_json, uint64_t seed, char** out);

/* clustering; cluster_json: {"linkage","criterion","threshold","max_clusters"};
 * precluster: "none" | "gold" | "kmeans" */
CDCR_API cdcr_status cdcr_cluster(const cdcr_model* model, const cdcr_corpus* corpus,
                                  const cdcr_vectors* vectors, const char* families_json,
                                  const char* cluster_json, const char* precluster, uint64_t seed,
                                  unsigned threads, cdcr_partition** out);

/* partitions */
CDCR_API cdcr_status cdcr_partition_gold(const cdcr_corpus* corpus, cdcr_partition** out);
CDCR_API cdcr_status cdcr_partition_save_json(const cdcr_partition* p, const char* path);
CDCR_API cdcr_status cdcr_partition_load_json(const char* path, cdcr_partition** out);
CDCR_API cdcr_status cdcr_partition_save_conll(const cdcr_partition* p, const char* path);
CDCR_API cdcr_status cdcr_partition_load_conll(const char* path, cdcr_partition** out);
CDCR_API cdcr_status cdcr_partition_size(const cdcr_partition* p, size_t* clusters,
                                         size_t* elements);
CDCR_API void cdcr_partition_free(cdcr_partition* p);

/* scoring: MUC, B3, CEAFe, LEA and CoNLL F1 as JSON */
CDCR_API cdcr_status cdcr_score(const cdcr_partition* key, const cdcr_partition* response,
                                char** out);
CDCR_API cdcr_status cdcr_score_corpus(const cdcr_corpus* corpus, const cdcr_partition* response,
                                       char** out);

/* baselines: kind is "lemma", "lemma-delta" or "lemma-time" */
CDCR_API cdcr_status cdcr_baseline(const cdcr_corpus* corpus, const char* kind, double delta,
                                   cdcr_partition** out);
CDCR_API cdcr_status cdcr_baseline_tune(const cdcr_corpus* train, const char* kind,
                                        double* delta, double* train_lea_f1);

/* Config-driven runs. overrides_json may be NULL or hold "seed", "out_dir",
 * "precluster". cdcr_tune returns classifier and clustering tuning results;
 * cdcr_experiment runs mode "in-dataset" or "cross-dataset", writes reports
 * to the output directory and returns the report JSON. */
CDCR_API cdcr_status cdcr_tune(const char* config_path, const char* overrides_json, char** out);
CDCR_API cdcr_status cdcr_experiment(const char* config_path, const char* mode,
                                     const char* overrides_json, char** out);

#ifdef __cplusplus
}
#endif

#endif
