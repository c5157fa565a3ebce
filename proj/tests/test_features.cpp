#include <cmath>
#include <map>
#include <numbers>

#include "cdcr/features.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdcr;
using doctest::Approx;

namespace {

// MLIPNS as published: shrink the Hamming distance (unequal lengths count the
// surplus) one mismatch at a time while checking the per-length threshold.
int mlipns_oracle(const std::string& src, const std::string& tar) {
  if (src == tar) return 0;
  if (src.empty() || tar.empty()) return 1;
  std::size_t ham = std::max(src.size(), tar.size()) - std::min(src.size(), tar.size());
  for (std::size_t i = 0; i < std::min(src.size(), tar.size()); ++i) ham += src[i] != tar[i];
  double ham_d = static_cast<double>(ham);
  double max_length = static_cast<double>(std::max(src.size(), tar.size()));
  int mismatches = 0;
  while (mismatches <= 2) {
    if (max_length < 1 || (1 - (max_length - ham_d) / max_length) <= 0.25) return 0;
    ++mismatches;
    ham_d -= 1;
    max_length -= 1;
  }
  return max_length < 1 ? 0 : 1;
}

std::size_t edit_oracle(const std::string& a, const std::string& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = edit_oracle(a.substr(1), b.substr(1)) + (a[0] != b[0]);
  return std::min({sub, edit_oracle(a.substr(1), b) + 1, edit_oracle(a, b.substr(1)) + 1});
}

std::string random_word(Rng& rng, std::size_t max_len) {
  std::string w;
  const std::size_t n = uniform_index(rng, max_len + 1);
  for (std::size_t i = 0; i < n; ++i) w.push_back(static_cast<char>('a' + uniform_index(rng, 3)));
  return w;
}

std::map<std::string, double> hand_tfidf(const std::vector<std::vector<std::string>>& docs,
                                         const std::vector<std::string>& tokens) {
  std::map<std::string, double> v;
  for (const auto& t : tokens) {
    std::size_t df = 0;
    for (const auto& d : docs) df += std::find(d.begin(), d.end(), t) != d.end();
    if (df == 0) continue;
    v[t] += std::log((1.0 + docs.size()) / (1.0 + df)) + 1.0;
  }
  return v;
}

double hand_cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (auto& [k, x] : a) {
    na += x * x;
    if (auto it = b.find(k); it != b.end()) dot += x * it->second;
  }
  for (auto& [k, y] : b) nb += y * y;
  return dot / std::sqrt(na * nb);
}

FeatureValue named(const std::vector<std::string>& names, const FeatureVector& fv,
                   const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  const auto i = static_cast<std::size_t>(it - names.begin());
  return {fv.values[i], fv.present[i] != 0};
}

}  // namespace

TEST_CASE("string distances") {
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("same", "same") == 0);
  CHECK(mlipns_distance("victory", "win") == mlipns_oracle("victory", "win"));
  CHECK(mlipns_distance("victory", "win") == 1);
  CHECK(mlipns_distance("attack", "attacks") == 0);
  CHECK(mlipns_distance("", "") == 0);
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_word(rng, 7), b = random_word(rng, 7);
    CAPTURE(a);
    CAPTURE(b);
    CHECK(mlipns_distance(a, b) == mlipns_oracle(a, b));
    CHECK(levenshtein(a, b) == edit_oracle(a, b));
  }
}

TEST_CASE("tf-idf cosine against a hand computation") {
  const std::vector<std::vector<std::string>> docs = {
      {"police", "arrest", "man", "arrest"}, {"police", "report", "fire"}, {"fire", "spread", "fast"}};
  const auto model = TfIdfModel::fit(docs);
  CHECK(model.document_count() == 3);
  CHECK(model.idf("police") == Approx(std::log(4.0 / 3.0) + 1));
  CHECK(model.idf("nowhere") == 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = 0; j < docs.size(); ++j) {
      const double fast = cosine(model.transform(std::span<const std::string>(docs[i])),
                                 model.transform(std::span<const std::string>(docs[j])));
      CHECK(fast == Approx(hand_cosine(hand_tfidf(docs, docs[i]), hand_tfidf(docs, docs[j]))));
    }
  }
  const std::vector<std::string> unknown = {"zzz"};
  CHECK(model.transform(std::span<const std::string>(unknown)).empty());
  // case folding
  const std::vector<std::string> upper = {"POLICE"};
  CHECK_FALSE(model.transform(std::span<const std::string>(upper)).empty());
}

TEST_CASE("geodesic distance") {
  CHECK(geodesic_km(0, 0, 0, 90) == Approx(std::numbers::pi / 2 * kEarthRadiusKm));
  CHECK(geodesic_km(0, 0, 0, 90) == Approx(10007.5).epsilon(1e-5));
  CHECK(geodesic_km(48.8566, 2.3522, 48.8566, 2.3522) == Approx(0.0));
  CHECK(geodesic_km(10, 20, -30, 40) == Approx(geodesic_km(-30, 40, 10, 20)));
}

TEST_CASE("geo hierarchy match") {
  EntityLink paris{0, {0, 1}, "Q90", 48.85, 2.35, {"Q90", "Q13917", "Q142"}};
  EntityLink france{0, {0, 1}, "Q142", {}, {}, {"Q142"}};
  EntityLink berlin{0, {0, 1}, "Q64", 52.5, 13.4, {"Q64", "Q1055", "Q183"}};
  CHECK(geo_hierarchy_match(paris, paris) == 0);
  CHECK(geo_hierarchy_match(paris, france) == 2);
  CHECK_FALSE(geo_hierarchy_match(paris, berlin).has_value());
}

TEST_CASE("temporal fields under the midnight convention") {
  const auto a = parse_timestamp_seconds("2020-01-01");
  const auto b = parse_timestamp_seconds("2020-01-02T13:00");
  REQUIRE(a);
  REQUIRE(b);
  const auto f = temporal_distance_fields(*a, *b);
  // 37 hours apart, counted in whole units
  CHECK(f == std::array<std::int64_t, 5>{0, 0, 0, 1, 37});
  CHECK(temporal_distance_fields(*b, *a) == f);
  const auto far = temporal_distance_fields(*parse_timestamp_seconds("2019-01-01"),
                                            *parse_timestamp_seconds("2020-03-01"));
  CHECK(far[0] == 1);
  CHECK(far[1] == 14);
  CHECK(far[2] == 60);
  CHECK(far[3] == 425);
}

TEST_CASE("feature schema") {
  CHECK(feature_names(FeatureToggles{}).size() == 70);
  const std::array<FeatureFamily, 1> only = {FeatureFamily::string_distance};
  const auto names = feature_names(FeatureToggles::only(only));
  CHECK(names.size() == 4);
  CHECK(names[0] == "string/is-surface-form-identical");
  CHECK(feature_family_from_string("spatial") == FeatureFamily::spatial);
  CHECK_THROWS_AS(feature_family_from_string("nope"), InvalidArgument);
}

TEST_CASE("a full pair is the union of the family operations") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  const auto store = VectorStore::load(testing::fixture("tiny_vectors.jsonl"));
  const auto tfidf = TfIdfModel::fit(corpus);
  const FeatureExtractor fx(corpus, tfidf, &store);
  for (const auto& p : all_pairs(corpus)) {
    const MentionRef a = corpus.at(p.a), b = corpus.at(p.b);
    std::vector<NamedFeature> parts;
    for (auto fn : {&FeatureExtractor::string_features, &FeatureExtractor::tfidf_features,
                    &FeatureExtractor::sentence_embedding_features,
                    &FeatureExtractor::action_embedding_features,
                    &FeatureExtractor::spatial_features, &FeatureExtractor::temporal_features,
                    &FeatureExtractor::wikidata_features}) {
      const auto family = (fx.*fn)(a, b);
      parts.insert(parts.end(), family.begin(), family.end());
    }
    const FeatureVector fv = fx.extract(a, b);
    REQUIRE(parts.size() == fv.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      CHECK(parts[i].name == fx.names()[i]);
      CHECK(parts[i].value.present == (fv.present[i] != 0));
      if (parts[i].value.present) CHECK(parts[i].value.value == fv.values[i]);
    }
  }
}

TEST_CASE("tiny corpus feature values") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  const auto store = VectorStore::load(testing::fixture("tiny_vectors.jsonl"));
  const auto tfidf = TfIdfModel::fit(corpus);
  const FeatureExtractor fx(corpus, tfidf, &store);
  const auto& n = fx.names();

  const auto same = fx.extract("a1/m1", "a3/m1");  // "arrested" vs "arrest"
  CHECK(named(n, same, "string/is-surface-form-identical").value == 0.0);
  CHECK(named(n, same, "string/is-lemma-identical").value == 1.0);
  CHECK(named(n, same, "string/surface-form-levenshtein-distance").value == 2.0);
  // Paris vs Berlin, both with coordinates
  const auto d = named(n, same, "spatial/distance-document-level-geodesic-distance");
  CHECK(d.present);
  CHECK(d.value == Approx(geodesic_km(48.8566, 2.3522, 52.52, 13.405)));
  // b1 has no publication date
  CHECK_FALSE(named(n, fx.extract("a1/m1", "b1/m1"), "temporal/distance-document-publish-level-day")
                  .present);
  // a1 publish 2020-01-01T10:00, a2 publish 2020-01-02
  const auto pub = fx.extract("a1/m1", "a2/m1");
  CHECK(named(n, pub, "temporal/distance-document-publish-level-hour").value == 14.0);
  // action embedding cosine
  const auto va = *store.get("a1/m1"), vb = *store.get("a2/m1");
  CHECK(named(n, pub, "action-embedding/action-mention").value ==
        Approx(std::clamp(cosine(va, vb), 0.0, 1.0)));
}

TEST_CASE("entity-set aggregation over all cross pairs") {
  std::vector<Document> docs(2);
  const char* ids[2][3] = {{"Q1", "Q2", nullptr}, {"Q3", "Q4", "Q5"}};
  for (int d = 0; d < 2; ++d) {
    docs[d].doc_id = "d" + std::to_string(d);
    docs[d].topic = "t";
    docs[d].subtopic = "s";
    docs[d].sentences = {{"x", "hit", "a", "b", "c"}};
    docs[d].mentions.push_back({"m", MentionKind::action, 0, {1, 2}, "c", {}, {}, "hit"});
    for (int e = 0; e < 3 && ids[d][e]; ++e) {
      docs[d].entity_links.push_back(
          {0, {static_cast<std::uint32_t>(2 + e), static_cast<std::uint32_t>(3 + e)}, ids[d][e], {}, {}, {}});
    }
  }
  const Corpus corpus("agg", docs);
  VectorStore store;
  Rng rng(12);
  for (const char* id : {"Q1", "Q2", "Q3", "Q4", "Q5"}) {
    std::vector<float> v(3);
    for (auto& x : v) x = static_cast<float>(uniform_unit(rng));
    store.insert(VectorStore::kb_key(id), v);
  }
  const std::array<FeatureFamily, 1> only = {FeatureFamily::wikidata_embedding};
  const auto tfidf = TfIdfModel::fit(corpus);
  const FeatureExtractor fx(corpus, tfidf, &store, FeatureToggles::only(only));
  const auto fv = fx.extract("d0/m", "d1/m");

  std::vector<double> sims;
  for (const char* x : {"Q1", "Q2"})
    for (const char* y : {"Q3", "Q4", "Q5"})
      sims.push_back(cosine(*store.get(VectorStore::kb_key(x)), *store.get(VectorStore::kb_key(y))));
  REQUIRE(sims.size() == 6);
  double mean = 0, var = 0;
  for (double s : sims) mean += s / 6;
  for (double s : sims) var += (s - mean) * (s - mean) / 6;
  const std::string region = "wikidata-embedding/surrounding-sentence-";
  CHECK(named(fx.names(), fv, region + "mean").value == Approx(mean));
  CHECK(named(fx.names(), fv, region + "variance").value == Approx(var));
  CHECK(named(fx.names(), fv, region + "min").value == Approx(*std::min_element(sims.begin(), sims.end())));
  CHECK(named(fx.names(), fv, region + "max").value == Approx(*std::max_element(sims.begin(), sims.end())));
  // the action span overlaps no entity
  CHECK_FALSE(named(fx.names(), fv, "wikidata-embedding/action-mention-mean").present);
}

TEST_CASE("feature files round trip") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  const auto tfidf = TfIdfModel::fit(corpus);
  const FeatureExtractor fx(corpus, tfidf, nullptr);
  const auto matrix = featurize(fx, all_pairs(corpus));
  CHECK(matrix.size() == 21);
  const auto dir = testing::scratch_dir("features");
  save_features_jsonl(matrix, dir / "f.jsonl");
  const auto back = load_features_jsonl(dir / "f.jsonl");
  CHECK(back.names == matrix.names);
  CHECK(back.pairs == matrix.pairs);
  CHECK(back.rows == matrix.rows);
  save_features_binary(matrix, dir / "f.bin");
  const auto bin = load_features_binary(dir / "f.bin");
  CHECK(bin.names == matrix.names);
  // the binary form stores single-precision values
  REQUIRE(bin.rows.size() == matrix.rows.size());
  for (std::size_t r = 0; r < bin.rows.size(); ++r) {
    CHECK(bin.rows[r].present == matrix.rows[r].present);
    for (std::size_t c = 0; c < matrix.names.size(); ++c)
      CHECK(bin.rows[r].values[c] == static_cast<double>(static_cast<float>(matrix.rows[r].values[c])));
  }

  const std::vector<std::string> schema = {matrix.names[3], matrix.names[0]};
  const auto p = matrix.project(schema);
  CHECK(p.rows[5].values[1] == matrix.rows[5].values[0]);
  CHECK_THROWS_AS(matrix.project({"nope"}), SchemaError);
}

TEST_CASE("embedding sidecar") {
  const auto store = VectorStore::load(testing::fixture("tiny_vectors.jsonl"));
  CHECK(store.dimension() == 4);
  CHECK(store.get("kb/Q90").has_value());
  CHECK_FALSE(store.get("kb/Q1").has_value());
  const auto spaced = store.namespaced("x:");
  CHECK(spaced.get("x:a1/m1").has_value());
  CHECK(spaced.get("kb/Q90").has_value());
  CHECK_THROWS(VectorStore::parse("{\"key\":\"a\",\"vector\":[1,2]}\n{\"key\":\"b\",\"vector\":[1]}\n"));
}
