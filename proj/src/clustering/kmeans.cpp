// Document preclustering by k-means over tf-idf vectors. Works on the Gram
// matrix of document inner products, so centroids are never materialized and
// each iteration costs O(n^2) regardless of k or vocabulary size.

#include <cmath>
#include <limits>

#include "cdcr/clustering.hpp"
#include "cdcr/random.hpp"

namespace cdcr {

double silhouette(const std::vector<std::size_t>& labels,
                  const std::function<double(std::size_t, std::size_t)>& distance) {
  const std::size_t n = labels.size();
  std::size_t k = 0;
  for (auto l : labels) k = std::max(k, l + 1);
  std::vector<std::size_t> count(k, 0);
  for (auto l : labels) ++count[l];
  std::size_t populated = 0;
  for (auto c : count) populated += c > 0;
  if (populated < 2) throw InvalidArgument("silhouette needs at least two clusters");

  double total = 0.0;
  std::vector<double> sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (count[labels[i]] == 1) continue;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum[labels[j]] += distance(i, j);
    }
    const double a = sum[labels[i]] / static_cast<double>(count[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != labels[i] && count[c] > 0) b = std::min(b, sum[c] / static_cast<double>(count[c]));
    }
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

namespace {

struct Run {
  std::vector<std::size_t> labels;
  double inertia = 0.0;
};

Run kmeans_once(const std::vector<double>& g, std::size_t n, std::size_t k, Rng& rng,
                int max_iterations) {
  auto point_distance = [&](std::size_t x, std::size_t y) {
    return std::max(0.0, g[x * n + x] + g[y * n + y] - 2.0 * g[x * n + y]);
  };

  // k-means++ seeding.
  std::vector<std::size_t> centers{static_cast<std::size_t>(uniform_index(rng, n))};
  std::vector<double> nearest(n);
  for (std::size_t x = 0; x < n; ++x) nearest[x] = point_distance(x, centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : nearest) total += v;
    std::size_t pick = 0;
    if (total > 0) {
      double u = uniform_unit(rng) * total;
      pick = n - 1;
      for (std::size_t x = 0; x < n; ++x) {
        if (u < nearest[x]) {
          pick = x;
          break;
        }
        u -= nearest[x];
      }
    } else {
      // Every point coincides with a center; any unused point will do.
      std::vector<std::size_t> unused;
      for (std::size_t x = 0; x < n; ++x) {
        if (std::find(centers.begin(), centers.end(), x) == centers.end()) unused.push_back(x);
      }
      pick = unused[uniform_index(rng, unused.size())];
    }
    centers.push_back(pick);
    for (std::size_t x = 0; x < n; ++x) nearest[x] = std::min(nearest[x], point_distance(x, pick));
  }

  Run run;
  run.labels.assign(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = point_distance(x, centers[c]);
      if (d < best) {
        best = d;
        run.labels[x] = c;
      }
    }
  }

  std::vector<double> cross(n * k), self(k);
  std::vector<std::size_t> size(k);
  auto refresh = [&] {
    std::fill(cross.begin(), cross.end(), 0.0);
    std::fill(self.begin(), self.end(), 0.0);
    std::fill(size.begin(), size.end(), 0);
    for (std::size_t y = 0; y < n; ++y) ++size[run.labels[y]];
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) cross[x * k + run.labels[y]] += g[x * n + y];
    }
    for (std::size_t x = 0; x < n; ++x) self[run.labels[x]] += cross[x * k + run.labels[x]];
    for (std::size_t c = 0; c < k; ++c) {
      if (size[c]) self[c] /= static_cast<double>(size[c]) * static_cast<double>(size[c]);
    }
  };
  auto centroid_distance = [&](std::size_t x, std::size_t c) {
    return g[x * n + x] - 2.0 * cross[x * k + c] / static_cast<double>(size[c]) + self[c];
  };

  for (int it = 0; it < max_iterations; ++it) {
    refresh();
    bool changed = false;
    std::vector<std::size_t> next = run.labels;
    for (std::size_t x = 0; x < n; ++x) {
      double best = centroid_distance(x, run.labels[x]);
      for (std::size_t c = 0; c < k; ++c) {
        if (!size[c]) continue;
        const double d = centroid_distance(x, c);
        if (d < best - 1e-12) {
          best = d;
          next[x] = c;
        }
      }
      changed |= next[x] != run.labels[x];
    }
    run.labels = std::move(next);
    if (!changed) break;
  }
  refresh();
  for (std::size_t x = 0; x < n; ++x) run.inertia += std::max(0.0, centroid_distance(x, run.labels[x]));
  return run;
}

}  // namespace

std::vector<std::size_t> kernel_kmeans(const std::vector<double>& gram, std::size_t n,
                                       std::size_t k, std::uint64_t seed,
                                       const KMeansOptions& options) {
  if (gram.size() != n * n) throw InvalidArgument("Gram matrix size mismatch");
  if (k < 1 || k > n) throw InvalidArgument("k must lie in [1, n]");
  Run best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Run run = kmeans_once(gram, n, k, rng, options.max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  // Renumber by first appearance so equal partitions carry equal labels.
  std::vector<std::size_t> remap(k, k), labels(n);
  std::size_t next = 0;
  for (std::size_t x = 0; x < n; ++x) {
    if (remap[best.labels[x]] == k) remap[best.labels[x]] = next++;
    labels[x] = remap[best.labels[x]];
  }
  return labels;
}

KMeansSelection kmeans_precluster(const Corpus& corpus, const TfIdfModel& tfidf,
                                  std::uint64_t seed, const KMeansOptions& options) {
  const std::size_t n = corpus.documents().size();
  if (n < 3) throw InvalidArgument("k-means preclustering needs at least three documents");
  std::vector<std::string> ids;
  std::vector<SparseVector> vectors;
  for (const Document& d : corpus.documents()) {
    ids.push_back(d.doc_id);
    vectors.push_back(tfidf.transform(std::span<const Sentence>(d.sentences)));
  }
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double dot = 0.0;
      auto a = vectors[i].begin(), b = vectors[j].begin();
      while (a != vectors[i].end() && b != vectors[j].end()) {
        if (a->first < b->first) ++a;
        else if (b->first < a->first) ++b;
        else dot += (a++)->second * (b++)->second;
      }
      gram[i * n + j] = gram[j * n + i] = dot;
    }
  }
  auto cosine_distance = [&](std::size_t i, std::size_t j) {
    return std::clamp(1.0 - gram[i * n + j], 0.0, 2.0);
  };

  KMeansSelection out;
  out.clustering = Clustering({ids});
  bool degenerate = true;
  for (std::size_t i = 0; i < n && degenerate; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (gram[i * n + i] + gram[j * n + j] - 2 * gram[i * n + j] > 1e-12) {
        degenerate = false;
        break;
      }
    }
  }
  if (degenerate) return out;

  for (std::size_t k = 2; k < n; ++k) {
    const auto labels = kernel_kmeans(gram, n, k, derive_seed(seed, k), options);
    const std::size_t populated = *std::max_element(labels.begin(), labels.end()) + 1;
    if (populated < 2) continue;
    const double s = silhouette(labels, cosine_distance);
    if (!out.silhouette || s > *out.silhouette) {
      out.silhouette = s;
      out.k = populated;
      out.clustering = Clustering::from_labels(ids, labels);
    }
  }
  return out;
}

}  // namespace cdcr
