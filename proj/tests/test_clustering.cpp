#include <cmath>

#include "cdcr/clustering.hpp"
#include "cdcr/harness.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdcr;
using doctest::Approx;

namespace {

DistanceMatrix random_matrix(std::size_t n, Rng& rng) {
  DistanceMatrix m(testing::element_names(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, uniform_unit(rng));
  return m;
}

}  // namespace

TEST_CASE("single and complete linkage on three points") {
  DistanceMatrix m({"a", "b", "c"});
  m.set(0, 1, 0.2);
  m.set(1, 2, 0.2);
  m.set(0, 2, 0.9);
  ClusterConfig config;
  config.threshold = 0.5;
  config.linkage = Linkage::single;
  CHECK(agglomerative(m, config) == Clustering({{"a", "b", "c"}}));
  config.linkage = Linkage::complete;
  CHECK(agglomerative(m, config) == Clustering({{"a", "b"}, {"c"}}));
  config.linkage = Linkage::average;
  CHECK(agglomerative(m, config).size() == 2);
}

TEST_CASE("single linkage equals the transitive closure of close pairs") {
  Rng rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 40);
    const auto m = random_matrix(n, rng);
    const double tau = uniform_unit(rng) * 0.3;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && m.at(i, j) <= tau) adj[i].push_back(j);
    ClusterConfig config;
    config.linkage = Linkage::single;
    config.threshold = tau;
    CHECK(agglomerative(m, config) == testing::bfs_components(n, adj));
  }
}

TEST_CASE("maxclust criterion") {
  Rng rng(4);
  const auto m = random_matrix(12, rng);
  ClusterConfig config;
  config.criterion = Criterion::maxclust;
  for (std::size_t k = 1; k <= 12; ++k) {
    config.max_clusters = k;
    CHECK(agglomerative(m, config).size() == k);
  }
}

TEST_CASE("dendrogram heights are nondecreasing and groups never merge") {
  Rng rng(6);
  const auto m = random_matrix(15, rng);
  for (Linkage l : {Linkage::single, Linkage::complete, Linkage::average}) {
    const auto merges = dendrogram(m, l);
    CHECK(merges.size() == 14);
    for (std::size_t i = 1; i < merges.size(); ++i) CHECK(merges[i].height >= merges[i - 1].height);
  }
  std::vector<std::size_t> groups(15);
  for (std::size_t i = 0; i < 15; ++i) groups[i] = i % 3;
  ClusterConfig config;
  config.threshold = 1.0;
  const auto c = agglomerative(m, config, &groups);
  CHECK(c.size() == 3);
  for (const auto& cluster : c.clusters) {
    const auto g = std::stoul(cluster[0].substr(1)) % 3;
    for (const auto& e : cluster) CHECK(std::stoul(e.substr(1)) % 3 == g);
  }
}

TEST_CASE("transitive closure") {
  CHECK(transitive_closure({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}) == Clustering({{"a", "b", "c"}}));
  CHECK(transitive_closure({"a", "b"}, {}) == Clustering({{"a"}, {"b"}}));
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 25);
    const auto names = testing::element_names(n);
    std::vector<std::pair<std::string, std::string>> relation;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t e = 0; e < n; ++e) {
      const auto i = uniform_index(rng, n), j = uniform_index(rng, n);
      relation.emplace_back(names[i], names[j]);
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    CHECK(transitive_closure(names, relation) == testing::bfs_components(n, adj));
  }
}

TEST_CASE("union-find") {
  UnionFind uf(5);
  CHECK(uf.unite(0, 3));
  CHECK_FALSE(uf.unite(3, 0));
  CHECK(uf.unite(4, 3));
  CHECK(uf.labels() == std::vector<std::size_t>{0, 1, 2, 0, 0});
}

TEST_CASE("silhouette") {
  const std::vector<double> points = {0, 0.1, 10, 10.1};
  const auto d = [&](std::size_t i, std::size_t j) { return std::abs(points[i] - points[j]); };
  const double s = silhouette({0, 0, 1, 1}, d);
  // s(0) = s(3) = (10.05 - 0.1) / 10.05, s(1) = s(2) = (9.95 - 0.1) / 9.95
  const double s0 = (10.05 - 0.1) / 10.05;
  CHECK(s0 == Approx(0.9900).epsilon(1e-4));
  CHECK(s == Approx((s0 + (9.95 - 0.1) / 9.95) / 2));
  const std::vector<double> twins = {0, 0};
  const auto dz = [&](std::size_t i, std::size_t j) { return std::abs(twins[i] - twins[j]); };
  CHECK(silhouette({0, 1}, dz) == 0.0);  // singleton clusters score 0
  const std::vector<double> three = {0, 0, 5};
  const auto d3 = [&](std::size_t i, std::size_t j) { return std::abs(three[i] - three[j]); };
  CHECK(silhouette({0, 1, 1}, d3) < 0.0);
}

TEST_CASE("gold preclusters follow shared events") {
  const Corpus gvc = load_corpus(testing::fixture("gvc_shaped.json"));
  std::vector<std::string> docs, subtopics;
  for (const auto& d : gvc.documents()) {
    docs.push_back(d.doc_id);
    subtopics.push_back(d.subtopic);
  }
  CHECK(gold_preclusters(gvc) == Clustering::from_labels(docs, subtopics));

  const Corpus fcc = load_corpus(testing::fixture("fcc_shaped.json"));
  CHECK(gold_preclusters(fcc).size() == 1);
}

TEST_CASE("kernel k-means and k selection") {
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 4; ++i) docs.push_back({"goal", "match", "referee", "league"});
  for (int i = 0; i < 4; ++i) docs.push_back({"stock", "market", "shares", "bank"});
  std::vector<Document> documents;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Document d;
    d.doc_id = "d" + std::to_string(i);
    d.topic = "t";
    d.subtopic = "s";
    d.sentences = {docs[i]};
    documents.push_back(d);
  }
  const Corpus corpus("groups", documents);
  const auto tfidf = TfIdfModel::fit(corpus);
  const auto sel = kmeans_precluster(corpus, tfidf, 1);
  CHECK(sel.k == 2);
  REQUIRE(sel.silhouette.has_value());
  CHECK(*sel.silhouette > 0.9);
  CHECK(sel.clustering == Clustering({{"d0", "d1", "d2", "d3"}, {"d4", "d5", "d6", "d7"}}));
  CHECK(kmeans_precluster(corpus, tfidf, 1).clustering == sel.clustering);

  std::vector<Document> same(4, documents[0]);
  for (std::size_t i = 0; i < same.size(); ++i) same[i].doc_id = "s" + std::to_string(i);
  const Corpus flat("same", same);
  const auto degenerate = kmeans_precluster(flat, TfIdfModel::fit(flat), 1);
  CHECK(degenerate.clustering.size() == 1);
  CHECK_FALSE(degenerate.silhouette.has_value());

  // linear kernel on two blobs
  const std::vector<std::array<double, 2>> pts = {{0, 1}, {0.1, 1}, {1, 0}, {1, 0.1}};
  std::vector<double> gram(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) gram[i * 4 + j] = pts[i][0] * pts[j][0] + pts[i][1] * pts[j][1];
  const auto labels = kernel_kmeans(gram, 4, 2, 5);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[2] == labels[3]);
  CHECK(labels[0] != labels[2]);
}

TEST_CASE("distance matrix from a model") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  const auto tfidf = TfIdfModel::fit(corpus);
  const std::array<FeatureFamily, 1> only = {FeatureFamily::string_distance};
  const FeatureExtractor fx(corpus, tfidf, nullptr, FeatureToggles::only(only));
  const auto matrix = featurize(fx, all_pairs(corpus));
  const auto model = train(TrainingData::from(matrix), {}, 0);
  const auto& refs = corpus.actions();
  const auto build = build_distance_matrix(model, fx, refs);
  const std::size_t n = refs.size();
  CHECK(build.predictions == n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(build.matrix.at(i, i) == 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      CHECK(build.matrix.at(i, j) ==
            Approx(1.0 - model.predict_proba(fx.extract(refs[i], refs[j]))));
    }
  }
  std::vector<std::size_t> groups(n, 0);
  groups[0] = 1;
  const auto blocked = build_distance_matrix(model, fx, refs, &groups);
  CHECK(blocked.predictions == (n - 1) * (n - 2) / 2);
  CHECK(blocked.matrix.at(0, 1) == 1.0);
  // thread count does not change the result
  const auto threaded = build_distance_matrix(model, fx, refs, nullptr, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) CHECK(threaded.matrix.at(i, j) == build.matrix.at(i, j));
}

TEST_CASE("invalid clustering configs") {
  ClusterConfig c;
  c.threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_THROWS(linkage_from_string("ward"));
}
