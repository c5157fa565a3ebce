#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdcr/classifier.hpp"
#include "cdcr/corpus.hpp"
#include "cdcr/features.hpp"

namespace cdcr {

/// A partition of string ids. Kept canonical: members sorted, clusters ordered
/// by their first member, so equal partitions compare equal.
struct Clustering {
  std::vector<std::vector<std::string>> clusters;

  Clustering() = default;
  explicit Clustering(std::vector<std::vector<std::string>> groups);

  /// Groups `items` by equal labels.
  template <class Label>
  static Clustering from_labels(const std::vector<std::string>& items,
                                const std::vector<Label>& labels);

  std::size_t size() const { return clusters.size(); }
  std::size_t element_count() const;
  std::vector<std::string> universe() const;
  /// Cluster index of every element.
  std::unordered_map<std::string, std::size_t> index() const;

  /// Throws ValidationError on empty clusters or repeated elements.
  void validate() const;
  friend bool operator==(const Clustering&, const Clustering&) = default;
};

template <class Label>
Clustering Clustering::from_labels(const std::vector<std::string>& items,
                                   const std::vector<Label>& labels) {
  std::vector<std::pair<Label, std::string>> tagged;
  tagged.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) tagged.emplace_back(labels.at(i), items[i]);
  std::sort(tagged.begin(), tagged.end());
  std::vector<std::vector<std::string>> groups;
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    if (i == 0 || !(tagged[i].first == tagged[i - 1].first)) groups.emplace_back();
    groups.back().push_back(std::move(tagged[i].second));
  }
  return Clustering(std::move(groups));
}

void save_clustering(const Clustering& clustering, const std::filesystem::path& path);
Clustering load_clustering(const std::filesystem::path& path);
std::string clustering_to_json(const Clustering& clustering);
Clustering clustering_from_json(std::string_view text);

class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);
  /// Component id per element, numbered by first appearance.
  std::vector<std::size_t> labels();

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint32_t> rank_;
};

// ---------------------------------------------------------------------------

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  /// All distances start at 1, the diagonal at 0.
  explicit DistanceMatrix(std::vector<std::string> ids);

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  double at(std::size_t i, std::size_t j) const { return d_[i * ids_.size() + j]; }
  /// Sets both (i,j) and (j,i). Distances must lie in [0,1].
  void set(std::size_t i, std::size_t j, double distance);

 private:
  std::vector<std::string> ids_;
  std::vector<double> d_;
};

struct DistanceBuild {
  DistanceMatrix matrix;
  /// Classifier evaluations performed.
  std::uint64_t predictions = 0;
};

/// d(i,j) = 1 - P(coref) over the actions in `refs`, oriented in canonical
/// corpus order. With `groups` (a label per ref), only pairs inside a group
/// are classified; the rest stay at distance 1.
DistanceBuild build_distance_matrix(const PairModel& model, const FeatureExtractor& extractor,
                                    const std::vector<MentionRef>& refs,
                                    const std::vector<std::size_t>* groups = nullptr,
                                    unsigned threads = 0);

enum class Linkage { single, complete, average };
enum class Criterion { distance, maxclust };

std::string_view to_string(Linkage linkage);
std::string_view to_string(Criterion criterion);
Linkage linkage_from_string(std::string_view name);
Criterion criterion_from_string(std::string_view name);

struct ClusterConfig {
  Linkage linkage = Linkage::average;
  Criterion criterion = Criterion::distance;
  double threshold = 0.5;
  std::size_t max_clusters = 1;

  void validate() const;
};

struct Merge {
  std::size_t a = 0, b = 0;
  double height = 0.0;
};

/// Full dendrogram (n - 1 merges by nondecreasing height, indices of
/// representative elements). Elements in different `groups` are never merged.
std::vector<Merge> dendrogram(const DistanceMatrix& matrix, Linkage linkage,
                              const std::vector<std::size_t>* groups = nullptr);

/// With groups, maxclust stops early if only cross-group merges remain.
Clustering agglomerative(const DistanceMatrix& matrix, const ClusterConfig& config,
                         const std::vector<std::size_t>* groups = nullptr);

Clustering transitive_closure(const std::vector<std::string>& universe,
                              const std::vector<std::pair<std::string, std::string>>& relation);

/// Documents linked by any shared gold event cluster, closed transitively.
Clustering gold_preclusters(const Corpus& corpus);

/// Mean silhouette; points in singleton clusters score 0. Needs >= 2 clusters.
double silhouette(const std::vector<std::size_t>& labels,
                  const std::function<double(std::size_t, std::size_t)>& distance);

struct KMeansSelection {
  Clustering clustering;
  std::size_t k = 1;
  /// Unset when the degenerate single-cluster fallback was used.
  std::optional<double> silhouette;
};

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 100;
};

/// k-means (k-means++ seeding) on L2-normalized tf-idf document vectors for
/// k = 2..n-1, picking the best cosine silhouette; ties go to the smaller k.
KMeansSelection kmeans_precluster(const Corpus& corpus, const TfIdfModel& tfidf,
                                  std::uint64_t seed, const KMeansOptions& options = {});

/// Kernel k-means over a Gram matrix of inner products (row-major n x n).
/// Returns the best labels over restarts by inertia.
std::vector<std::size_t> kernel_kmeans(const std::vector<double>& gram, std::size_t n,
                                       std::size_t k, std::uint64_t seed,
                                       const KMeansOptions& options = {});

/// Document-level precluster label for each action ref.
std::vector<std::size_t> mention_groups(const Corpus& corpus, const Clustering& document_clusters,
                                        const std::vector<MentionRef>& refs);

}  // namespace cdcr
