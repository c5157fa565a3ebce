#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "cdcr/clustering.hpp"
#include "json.hpp"

namespace cdcr {

Clustering::Clustering(std::vector<std::vector<std::string>> groups) : clusters(std::move(groups)) {
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
    if (a.empty() || b.empty()) return a.size() < b.size();
    return a.front() < b.front();
  });
}

std::size_t Clustering::element_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.size();
  return n;
}

std::vector<std::string> Clustering::universe() const {
  std::vector<std::string> out;
  out.reserve(element_count());
  for (const auto& c : clusters) out.insert(out.end(), c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::unordered_map<std::string, std::size_t> Clustering::index() const {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (const auto& e : clusters[i]) out.emplace(e, i);
  }
  return out;
}

void Clustering::validate() const {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i].empty()) throw ValidationError("cluster " + std::to_string(i) + " is empty");
    for (const auto& e : clusters[i]) {
      if (!seen.insert(e).second) {
        throw ValidationError("element '" + e + "' appears in more than one cluster");
      }
    }
  }
}

std::string clustering_to_json(const Clustering& clustering) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < clustering.clusters.size(); ++i) {
    j[std::to_string(i)] = clustering.clusters[i];
  }
  return j.dump(1);
}

Clustering clustering_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed clustering JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("clustering JSON must map cluster ids to member lists");
  std::vector<std::vector<std::string>> groups;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it->is_array()) throw SchemaError("cluster '" + it.key() + "' is not a list");
    std::vector<std::string> members;
    for (const auto& m : *it) {
      if (!m.is_string()) throw SchemaError("cluster '" + it.key() + "' has a non-string member");
      members.push_back(m.get<std::string>());
    }
    groups.push_back(std::move(members));
  }
  Clustering c(std::move(groups));
  c.validate();
  return c;
}

void save_clustering(const Clustering& clustering, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write clustering '" + path.string() + "'");
  out << clustering_to_json(clustering) << '\n';
}

Clustering load_clustering(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open clustering '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return clustering_from_json(buf.str());
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
  for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
}

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  return true;
}

std::vector<std::size_t> UnionFind::labels() {
  std::vector<std::size_t> out(parent_.size());
  std::unordered_map<std::size_t, std::size_t> number;
  for (std::size_t i = 0; i < parent_.size(); ++i) {
    out[i] = number.try_emplace(find(i), number.size()).first->second;
  }
  return out;
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids)
    : ids_(std::move(ids)), d_(ids_.size() * ids_.size(), 1.0) {
  for (std::size_t i = 0; i < ids_.size(); ++i) d_[i * ids_.size() + i] = 0.0;
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double distance) {
  if (!(distance >= 0.0 && distance <= 1.0)) {
    throw InvalidArgument("distance " + std::to_string(distance) + " outside [0, 1]");
  }
  if (i == j) {
    if (distance != 0.0) throw InvalidArgument("nonzero self-distance");
    return;
  }
  d_[i * ids_.size() + j] = distance;
  d_[j * ids_.size() + i] = distance;
}

std::string_view to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "average";
}

std::string_view to_string(Criterion criterion) {
  return criterion == Criterion::distance ? "distance" : "maxclust";
}

Linkage linkage_from_string(std::string_view name) {
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  if (name == "average") return Linkage::average;
  throw InvalidArgument("unknown linkage '" + std::string(name) + "'");
}

Criterion criterion_from_string(std::string_view name) {
  if (name == "distance") return Criterion::distance;
  if (name == "maxclust") return Criterion::maxclust;
  throw InvalidArgument("unknown cluster criterion '" + std::string(name) + "'");
}

void ClusterConfig::validate() const {
  if (criterion == Criterion::distance && !(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("distance threshold must lie in [0, 1]");
  }
  if (criterion == Criterion::maxclust && max_clusters < 1) {
    throw InvalidArgument("maxclust needs at least one cluster");
  }
}

namespace {

// Stands in for "never merge" between preclusters; far above any probability
// distance and exact under the Lance-Williams updates.
constexpr double kBlocked = 1e9;

}  // namespace

std::vector<Merge> dendrogram(const DistanceMatrix& matrix, Linkage linkage,
                              const std::vector<std::size_t>* groups) {
  const std::size_t n = matrix.size();
  if (groups && groups->size() != n) throw InvalidArgument("group labels do not match the matrix");
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d[i * n + j] = groups && (*groups)[i] != (*groups)[j] ? kBlocked : matrix.at(i, j);
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<std::uint8_t> active(n, 1);
  std::vector<std::size_t> chain;
  std::vector<Merge> merges;
  merges.reserve(n ? n - 1 : 0);

  // Nearest-neighbor chain; valid for the three reducible linkages.
  std::size_t remaining = n;
  std::size_t first_active = 0;
  while (remaining > 1) {
    if (chain.empty()) {
      while (!active[first_active]) ++first_active;
      chain.push_back(first_active);
    }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
    std::size_t b = prev;
    double best = prev < n ? d[a * n + prev] : std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < n; ++x) {
      if (x == a || !active[x]) continue;
      if (d[a * n + x] < best) {
        best = d[a * n + x];
        b = x;
      }
    }
    if (b != prev) {
      chain.push_back(b);
      continue;
    }
    chain.pop_back();
    chain.pop_back();
    const std::size_t keep = std::min(a, b), drop = std::max(a, b);
    merges.push_back({keep, drop, best});
    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == keep || x == drop) continue;
      const double dk = d[keep * n + x], dd = d[drop * n + x];
      double v = 0.0;
      switch (linkage) {
        case Linkage::single: v = std::min(dk, dd); break;
        case Linkage::complete: v = std::max(dk, dd); break;
        case Linkage::average:
          v = (static_cast<double>(size[keep]) * dk + static_cast<double>(size[drop]) * dd) /
              static_cast<double>(size[keep] + size[drop]);
          break;
      }
      d[keep * n + x] = d[x * n + keep] = v;
    }
    size[keep] += size[drop];
    active[drop] = 0;
    --remaining;
  }
  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge& x, const Merge& y) { return x.height < y.height; });
  while (!merges.empty() && merges.back().height >= kBlocked) merges.pop_back();
  return merges;
}

Clustering agglomerative(const DistanceMatrix& matrix, const ClusterConfig& config,
                         const std::vector<std::size_t>* groups) {
  config.validate();
  const std::size_t n = matrix.size();
  if (config.criterion == Criterion::maxclust && config.max_clusters > n) {
    throw InvalidArgument("maxclust " + std::to_string(config.max_clusters) + " exceeds " +
                          std::to_string(n) + " elements");
  }
  const std::vector<Merge> merges = dendrogram(matrix, config.linkage, groups);
  UnionFind uf(n);
  std::size_t clusters = n;
  for (const Merge& m : merges) {
    if (config.criterion == Criterion::distance && m.height > config.threshold) break;
    if (config.criterion == Criterion::maxclust && clusters <= config.max_clusters) break;
    if (uf.unite(m.a, m.b)) --clusters;
  }
  return Clustering::from_labels(matrix.ids(), uf.labels());
}

Clustering transitive_closure(const std::vector<std::string>& universe,
                              const std::vector<std::pair<std::string, std::string>>& relation) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < universe.size(); ++i) {
    if (!index.emplace(universe[i], i).second) {
      throw InvalidArgument("duplicate element '" + universe[i] + "'");
    }
  }
  UnionFind uf(universe.size());
  for (const auto& [a, b] : relation) {
    auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      throw NotFoundError("relation names '" + (ia == index.end() ? a : b) +
                          "' outside the universe");
    }
    uf.unite(ia->second, ib->second);
  }
  return Clustering::from_labels(universe, uf.labels());
}

Clustering gold_preclusters(const Corpus& corpus) {
  std::vector<std::string> docs;
  for (const Document& d : corpus.documents()) docs.push_back(d.doc_id);
  std::map<std::string, std::size_t> first_doc;
  UnionFind uf(docs.size());
  for (MentionRef ref : corpus.actions()) {
    auto [it, inserted] = first_doc.try_emplace(corpus.cluster_of(ref), ref.doc);
    if (!inserted) uf.unite(it->second, ref.doc);
  }
  return Clustering::from_labels(docs, uf.labels());
}

std::vector<std::size_t> mention_groups(const Corpus& corpus, const Clustering& document_clusters,
                                        const std::vector<MentionRef>& refs) {
  const auto index = document_clusters.index();
  std::vector<std::size_t> out;
  out.reserve(refs.size());
  for (MentionRef ref : refs) {
    const std::string& doc = corpus.document_of(ref).doc_id;
    auto it = index.find(doc);
    if (it == index.end()) throw NotFoundError("document '" + doc + "' is not in any precluster");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace cdcr
