#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cdcr/classifier.hpp"
#include "cdcr/clustering.hpp"
#include "cdcr/corpus.hpp"
#include "cdcr/features.hpp"
#include "cdcr/metrics.hpp"
#include "cdcr/sampler.hpp"
#include "json.hpp"

namespace cdcr {

// ---------------------------------------------------------------------------
// Baselines

/// Groups action mentions by case-folded lemma.
Clustering lemma_baseline(const Corpus& corpus);

/// Applies lemma_baseline inside each document cluster.
Clustering lemma_within(const Corpus& corpus, const Clustering& document_clusters);

/// Average-linkage document clustering on tf-idf cosine distance at `delta`,
/// then lemma matching within document clusters.
Clustering lemma_delta(const Corpus& corpus, double delta);

/// Document date: the first temporal expression in reading order, else the
/// publication date.
std::optional<std::int64_t> document_time_seconds(const Document& doc);

/// Average-linkage document clustering on date difference in hours at
/// `delta_hours`; undated documents stay alone. Then lemma matching.
Clustering lemma_time(const Corpus& corpus, double delta_hours);

enum class BaselineKind { lemma, lemma_delta, lemma_time };
std::string_view to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(std::string_view name);

std::vector<double> baseline_grid(BaselineKind kind);

struct BaselineTuning {
  double delta = 0.0;
  double train_lea_f1 = 0.0;
};

/// Grid search of delta maximizing LEA F1 on `train`; ties go to the smaller delta.
BaselineTuning tune_delta(const Corpus& train, BaselineKind kind);

Clustering run_baseline(const Corpus& corpus, BaselineKind kind, double delta);

// ---------------------------------------------------------------------------
// Masking

struct MaskSpec {
  /// Subset of {action, participants, time, location, publish_date}.
  std::set<std::string> components;
  std::uint64_t seed = 0;

  void validate() const;
  static MaskSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct MaskResult {
  Corpus corpus;
  /// "doc/mention" keys of masked action mentions.
  std::vector<std::string> masked_actions;
};

MaskResult mask_corpus(const Corpus& corpus, const MaskSpec& spec);

// ---------------------------------------------------------------------------
// Search

/// Named dimensions, each a list of candidate values.
using SearchSpace = std::map<std::string, std::vector<nlohmann::json>>;

struct TuneTrial {
  nlohmann::json params;
  double score = 0.0;
};

struct TuneResult {
  nlohmann::json best;
  std::optional<double> best_score;
  std::vector<TuneTrial> trials;
};

/// Seeded random search over the grid. Grids no larger than the budget are
/// covered exhaustively (in shuffled order); otherwise `budget` distinct points
/// are drawn. A one-point space returns without evaluating. Ties keep the
/// earlier trial.
TuneResult tune(const SearchSpace& space, int budget, std::uint64_t seed,
                const std::function<double(const nlohmann::json&)>& objective);

std::size_t grid_size(const SearchSpace& space);

/// Documents per fold, `repeats` times: groups (topic or subtopic labels) are
/// shuffled and dealt round-robin into `folds` folds.
std::vector<std::vector<std::vector<std::size_t>>> document_folds(const Corpus& corpus,
                                                                   bool by_topic, int folds,
                                                                   int repeats,
                                                                   std::uint64_t seed);

LearnerConfig learner_from_json(const nlohmann::json& j, LearnerConfig base = {});
nlohmann::json learner_to_json(const LearnerConfig& config);
ClusterConfig cluster_config_from_json(const nlohmann::json& j, ClusterConfig base = {});
nlohmann::json cluster_config_to_json(const ClusterConfig& config);

// ---------------------------------------------------------------------------
// Experiments

enum class PreclusterMode { none, gold, kmeans };
std::string_view to_string(PreclusterMode mode);
PreclusterMode precluster_mode_from_string(std::string_view name);

struct CorpusEntry {
  std::string name;
  std::filesystem::path path;
  std::optional<std::filesystem::path> vectors;
  SplitSpec split;
  /// Tuning folds partition documents by topic instead of subtopic.
  bool folds_by_topic = false;
};

struct TuningConfig {
  int classifier_trials = 200;
  int clustering_trials = 200;
  int folds = 6;
  int repeats = 3;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::vector<CorpusEntry> corpora;
  SamplerConfig sampler;
  FeatureToggles features;
  LearnerConfig learner;
  SearchSpace learner_space;
  ClusterConfig clustering;
  SearchSpace clustering_space;
  TuningConfig tuning;
  bool rfe = true;
  PreclusterMode precluster = PreclusterMode::none;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::optional<MaskSpec> mask;
  double threshold = 0.5;
  unsigned threads = 0;
  std::vector<std::vector<std::string>> cross_train;
  std::vector<std::string> cross_test;
  std::filesystem::path out_dir;

  /// Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
  void validate() const;
};

/// A corpus with its splits and sidecar, masked and cleaned as configured.
struct PreparedCorpus {
  std::string name;
  CorpusSplits splits;
  VectorStore vectors;
  bool folds_by_topic = false;
};

PreparedCorpus prepare_corpus(const CorpusEntry& entry, const ExperimentConfig& config);

struct TrainedSystem {
  std::string name;
  std::vector<std::string> schema;
  RfeResult rfe;
  LearnerConfig learner;
  ClusterConfig clustering;
  nlohmann::json classifier_tuning;
  nlohmann::json clustering_tuning;
  std::vector<PairModel> models;  // one per seed
  std::vector<PairSetProvenance> pair_provenance;
  /// Gain (trees) or coefficient (linear) importance of the first model.
  ImportanceReport importance;
};

/// Sampling, feature selection, classifier and clustering tuning, and one
/// model per seed, all on `train` (and `dev` for selection).
TrainedSystem train_system(const std::string& name, const Corpus& train, const Corpus& dev,
                           const VectorStore& vectors, bool folds_by_topic,
                           const ExperimentConfig& config,
                           const std::optional<std::vector<std::string>>& fixed_schema = {});

struct Prediction {
  Clustering response;
  std::vector<MentionPair> pairs;
  std::vector<double> probabilities;
  std::uint64_t classifier_calls = 0;
};

/// Classifies all action pairs of `corpus` (inside preclusters when a mode is
/// set) and clusters them.
Prediction predict_corpus(const PairModel& model, const ClusterConfig& clustering,
                          const Corpus& corpus, const VectorStore& vectors,
                          const FeatureToggles& features, PreclusterMode mode,
                          std::uint64_t seed, unsigned threads);

struct RunReport {
  std::string train_name;
  std::string test_name;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricReport> per_seed;
  MetricReport mean;
  LinkTypeReport link_types;
  ImportanceReport importance;
  MetricReport lemma_baseline;
  std::vector<std::string> schema;
  std::vector<std::uint64_t> model_hashes;
  nlohmann::json provenance;

  nlohmann::json to_json() const;
};

RunReport evaluate_system(const TrainedSystem& system, const std::string& test_name,
                          const Corpus& test, const VectorStore& vectors,
                          const ExperimentConfig& config);

/// Uses the first configured corpus.
RunReport run_in_dataset(const ExperimentConfig& config);

struct CrossDatasetReport {
  /// [train source][test corpus]
  std::vector<std::vector<RunReport>> runs;
  /// Harmonic mean of LEA scores over the test corpora, per train source.
  std::vector<Score> lea_harmonic;
  std::vector<std::vector<std::string>> selected_features;

  nlohmann::json to_json() const;
  std::string to_tsv() const;
};

CrossDatasetReport run_cross_dataset(const ExperimentConfig& config);

/// Writes report.json and TSV tables into `out_dir`.
void write_run_report(const RunReport& report, const std::filesystem::path& out_dir);
void write_cross_report(const CrossDatasetReport& report, const std::filesystem::path& out_dir);

}  // namespace cdcr
