#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cdcr/corpus.hpp"
#include "cdcr/sampler.hpp"

namespace cdcr {

// ---------------------------------------------------------------------------
// String distances

std::size_t levenshtein(std::string_view a, std::string_view b);

/// Binary MLIPNS distance: 0 when the strings match under the rule, else 1.
/// Parameters: per-deletion threshold 0.25, at most 2 mismatches.
int mlipns_distance(std::string_view a, std::string_view b, double threshold = 0.25,
                    int max_mismatches = 2);

// ---------------------------------------------------------------------------
// TF-IDF

/// Sorted (term id, weight) entries.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

double cosine(const SparseVector& a, const SparseVector& b);

class TfIdfModel {
 public:
  /// One pseudo-document per corpus document (all sentences concatenated).
  static TfIdfModel fit(const Corpus& corpus);
  static TfIdfModel fit(const std::vector<std::vector<std::string>>& documents);

  /// Raw term counts times smoothed idf, L2-normalized. Unknown terms are
  /// ignored; an all-unknown region yields an empty vector.
  SparseVector transform(std::span<const std::string> tokens) const;
  SparseVector transform(std::span<const Sentence> sentences) const;

  std::size_t document_count() const { return document_count_; }
  std::size_t vocabulary_size() const { return idf_.size(); }
  double idf(std::string_view term) const;

 private:
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  std::vector<double> idf_;
  std::size_t document_count_ = 0;
};

std::string lowercase(std::string_view text);

// ---------------------------------------------------------------------------
// Precomputed embedding vectors

class VectorStore {
 public:
  VectorStore() = default;
  static VectorStore load(const std::filesystem::path& path);
  static VectorStore parse(std::string_view jsonl);

  void insert(std::string key, std::vector<float> vector);
  std::optional<std::span<const float>> get(std::string_view key) const;
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }

  /// Copy with "<prefix>" prepended to document-scoped keys (everything
  /// except "kb/..." entries).
  VectorStore namespaced(const std::string& prefix) const;
  /// Copy without the given keys.
  VectorStore without(const std::unordered_set<std::string>& keys) const;
  static VectorStore merge(const std::vector<VectorStore>& stores);

  static std::string mention_key(std::string_view doc_id, std::string_view mention_id);
  static std::string sentence_key(std::string_view doc_id, std::size_t sentence);
  static std::string kb_key(std::string_view kb_id);

 private:
  std::unordered_map<std::string, std::vector<float>> vectors_;
  std::size_t dimension_ = 0;
};

double cosine(std::span<const float> a, std::span<const float> b);

// ---------------------------------------------------------------------------
// Geography

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr int kGeoHierarchyCap = 6;

double geodesic_km(double lat_a, double lon_a, double lat_b, double lon_b);

/// Fewest upward steps, summed over both sides, until the two containment
/// chains share a kb id. Absent beyond `cap`.
std::optional<int> geo_hierarchy_match(const EntityLink& a, const EntityLink& b,
                                       int cap = kGeoHierarchyCap);

// ---------------------------------------------------------------------------
// Features

struct FeatureValue {
  double value = 0.0;
  bool present = false;
};

struct NamedFeature {
  std::string name;
  FeatureValue value;
};

/// Values aligned with a shared list of feature names.
struct FeatureVector {
  std::vector<double> values;
  std::vector<std::uint8_t> present;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class FeatureFamily : std::uint8_t {
  string_distance,
  tfidf,
  sentence_embedding,
  action_embedding,
  spatial,
  temporal,
  wikidata_embedding,
};

inline constexpr std::array<FeatureFamily, 7> kFeatureFamilies = {
    FeatureFamily::string_distance,   FeatureFamily::tfidf,
    FeatureFamily::sentence_embedding, FeatureFamily::action_embedding,
    FeatureFamily::spatial,           FeatureFamily::temporal,
    FeatureFamily::wikidata_embedding};

std::string_view to_string(FeatureFamily family);
FeatureFamily feature_family_from_string(std::string_view name);

struct FeatureToggles {
  std::array<bool, 7> enabled{true, true, true, true, true, true, true};
  bool on(FeatureFamily f) const { return enabled[static_cast<int>(f)]; }
  static FeatureToggles only(std::span<const FeatureFamily> families);
};

enum class TemporalLevel : std::uint8_t {
  document_publish,
  document,
  srl,
  sentence,
  closest_preceding_sentence,
  closest_overall,
};

enum class SpatialLevel : std::uint8_t {
  document,
  srl,
  sentence,
  closest_preceding_sentence,
  closest_overall,
};

/// Canonical feature names of one family, in emission order.
std::vector<std::string> feature_names(FeatureFamily family);
std::vector<std::string> feature_names(const FeatureToggles& toggles);

/// |a - b| in seconds floored to {year, month, week, day, hour} units
/// (365 d, 30 d, 7 d, 1 d, 1 h).
std::array<std::int64_t, 5> temporal_distance_fields(std::int64_t seconds_a,
                                                     std::int64_t seconds_b);

/// Per-mention context resolved once and reused for every pair.
struct MentionProfile {
  std::string surface;
  std::optional<std::string> lemma;
  SparseVector document_tfidf;
  SparseVector sentence_tfidf;
  SparseVector context_tfidf;
  std::array<std::optional<std::int64_t>, 6> time_seconds;
  std::array<const EntityLink*, 5> place{};
  std::optional<std::span<const float>> action_vector;
  std::optional<std::span<const float>> sentence_vector;
  std::optional<std::span<const float>> doc_start_vector;
  /// Entity vectors per region: action, role args, sentence, context, doc start.
  std::array<std::vector<std::span<const float>>, 5> kb_sets;
};

/// Resolves the timestamp of a mention under one temporal strategy.
std::optional<std::int64_t> resolve_time(const Document& doc, const Mention& action,
                                         TemporalLevel level);
/// Resolves the location entity of a mention under one spatial strategy.
const EntityLink* resolve_place(const Document& doc, const Mention& action, SpatialLevel level);

/// Stateless over its inputs; all references must outlive the extractor.
class FeatureExtractor {
 public:
  FeatureExtractor(const Corpus& corpus, const TfIdfModel& tfidf, const VectorStore* store,
                   FeatureToggles toggles = {});

  const std::vector<std::string>& names() const { return names_; }
  const Corpus& corpus() const { return corpus_; }
  const MentionProfile& profile(MentionRef ref) const;

  FeatureVector extract(MentionRef a, MentionRef b) const;
  FeatureVector extract(std::string_view key_a, std::string_view key_b) const;

  std::vector<NamedFeature> string_features(MentionRef a, MentionRef b) const;
  std::vector<NamedFeature> tfidf_features(MentionRef a, MentionRef b) const;
  std::vector<NamedFeature> sentence_embedding_features(MentionRef a, MentionRef b) const;
  std::vector<NamedFeature> action_embedding_features(MentionRef a, MentionRef b) const;
  std::vector<NamedFeature> temporal_features(MentionRef a, MentionRef b) const;
  std::vector<NamedFeature> spatial_features(MentionRef a, MentionRef b) const;
  std::vector<NamedFeature> wikidata_features(MentionRef a, MentionRef b) const;

 private:
  std::size_t slot(MentionRef ref) const;

  const Corpus& corpus_;
  FeatureToggles toggles_;
  std::vector<std::string> names_;
  std::vector<MentionProfile> profiles_;
  std::vector<std::uint32_t> slot_base_;
  std::vector<std::int32_t> slot_of_;
};

/// Pairs plus their feature rows under one list of names.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<MentionPair> pairs;
  std::vector<FeatureVector> rows;

  std::size_t size() const { return rows.size(); }
  /// Columns reordered/filtered to `schema`; unknown names are an error.
  FeatureMatrix project(const std::vector<std::string>& schema) const;
};

FeatureMatrix featurize(const FeatureExtractor& extractor, const std::vector<MentionPair>& pairs);

void save_features_jsonl(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix load_features_jsonl(const std::filesystem::path& path);
void save_features_binary(const FeatureMatrix& matrix, const std::filesystem::path& path);
/// Names and rows only; pair identities live in the JSON-lines form.
FeatureMatrix load_features_binary(const std::filesystem::path& path);

}  // namespace cdcr
