#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "cdcr/clustering.hpp"
#include "cdcr/corpus.hpp"
#include "cdcr/metrics.hpp"
#include "cdcr/random.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(CDCR_FIXTURES) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cdcr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<std::string> element_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("e" + std::to_string(i));
  return out;
}

/// Random partition of e0..e{n-1} into at most `max_clusters` groups.
inline cdcr::Clustering random_partition(std::size_t n, std::size_t max_clusters, cdcr::Rng& rng) {
  const auto names = element_names(n);
  std::vector<std::uint64_t> labels(n);
  for (auto& l : labels) l = cdcr::uniform_index(rng, max_clusters);
  return cdcr::Clustering::from_labels(names, labels);
}

/// Partition with exactly `entities` nonempty clusters over n >= entities elements.
inline cdcr::Clustering random_partition_exact(std::size_t n, std::size_t entities,
                                               cdcr::Rng& rng) {
  const auto names = element_names(n);
  std::vector<std::uint64_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i < entities ? i : cdcr::uniform_index(rng, entities);
  cdcr::shuffle(labels, rng);
  return cdcr::Clustering::from_labels(names, labels);
}

// ---------------------------------------------------------------------------
// CEAFe by exhaustive alignment

inline double phi4(const std::vector<std::string>& k, const std::vector<std::string>& r) {
  std::set<std::string> a(k.begin(), k.end());
  std::size_t common = 0;
  for (const auto& x : r) common += a.count(x);
  return 2.0 * static_cast<double>(common) / static_cast<double>(k.size() + r.size());
}

/// Best total similarity over all one-to-one alignments.
inline double best_alignment(const std::vector<std::vector<double>>& w) {
  const std::size_t rows = w.size();
  const std::size_t cols = rows ? w[0].size() : 0;
  // permute over the larger side; indices past the last column mean unaligned
  const std::size_t n = std::max(rows, cols);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (perm[i] < cols) total += w[i][perm[i]];
    }
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline cdcr::Score brute_ceaf_e(const cdcr::Clustering& key, const cdcr::Clustering& response) {
  std::vector<std::vector<double>> w(key.size(), std::vector<double>(response.size()));
  for (std::size_t i = 0; i < key.size(); ++i) {
    for (std::size_t j = 0; j < response.size(); ++j) {
      w[i][j] = phi4(key.clusters[i], response.clusters[j]);
    }
  }
  const double total = best_alignment(w);
  cdcr::Score s;
  s.recall = key.size() ? total / key.size() : 0.0;
  s.precision = response.size() ? total / response.size() : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Coreferring-pair count per cluster, straight from the three equations

inline std::vector<std::uint64_t> brute_pair_counts(const std::vector<std::uint64_t>& sizes,
                                                    double c) {
  long double mentions = 0;
  for (auto m : sizes) mentions += m;
  std::vector<std::uint64_t> out;
  for (auto m : sizes) {
    long double covered = 0;
    for (auto other : sizes) {
      if (other <= m) covered += other;
    }
    const long double cdf = covered / mentions;
    const long double us = c + std::pow(static_cast<long double>(m), 1.0L - cdf) - 1.0L;
    const long double per = std::min(us, static_cast<long double>(m) / 2.0L);
    const long double count = std::ceil((static_cast<long double>(m) - 1.0L) * per);
    out.push_back(m < 2 ? 0 : static_cast<std::uint64_t>(count));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph components by breadth-first search

inline cdcr::Clustering bfs_components(std::size_t n,
                                       const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<std::size_t> label(n, SIZE_MAX);
  std::size_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] != SIZE_MAX) continue;
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = next;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u]) {
        if (label[v] == SIZE_MAX) {
          label[v] = next;
          q.push(v);
        }
      }
    }
    ++next;
  }
  return cdcr::Clustering::from_labels(element_names(n), label);
}

// ---------------------------------------------------------------------------
// Synthetic corpora built in memory

/// One action per sentence; clusters of the given sizes spread at random over
/// `topics` x 2 subtopics x 2 documents.
inline cdcr::Corpus corpus_from_sizes(const std::vector<std::uint64_t>& sizes, cdcr::Rng& rng,
                                      std::size_t topics = 2) {
  std::vector<cdcr::Document> docs;
  for (std::size_t t = 0; t < topics; ++t) {
    for (int s = 0; s < 2; ++s) {
      for (int d = 0; d < 2; ++d) {
        cdcr::Document doc;
        doc.topic = "t" + std::to_string(t);
        doc.subtopic = doc.topic + "s" + std::to_string(s);
        doc.doc_id = doc.subtopic + "d" + std::to_string(d);
        docs.push_back(std::move(doc));
      }
    }
  }
  std::size_t serial = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::uint64_t i = 0; i < sizes[c]; ++i) {
      cdcr::Document& doc = docs[cdcr::uniform_index(rng, docs.size())];
      cdcr::Mention m;
      m.mention_id = "m" + std::to_string(serial++);
      m.sentence = static_cast<std::uint32_t>(doc.sentences.size());
      m.token_span = {0, 1};
      m.cluster_id = "c" + std::to_string(c);
      m.lemma = "act";
      doc.sentences.push_back({"act", "."});
      doc.mentions.push_back(std::move(m));
    }
  }
  std::erase_if(docs, [](const cdcr::Document& d) { return d.sentences.empty(); });
  return cdcr::Corpus("sizes", std::move(docs));
}

}  // namespace testing
