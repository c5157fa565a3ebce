#include <fstream>
#include <regex>

#include "cdcr/harness.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdcr;
using doctest::Approx;
using nlohmann::json;

namespace {

Document make_doc(const std::string& id, const std::string& topic,
                  const std::vector<std::string>& lemmas,
                  std::optional<std::string> published = std::nullopt) {
  Document d;
  d.doc_id = id;
  d.topic = topic;
  d.subtopic = topic;
  if (published) d.publish_date = PublishDate{*parse_timestamp_seconds(*published) / 60};
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    d.sentences.push_back({"they", lemmas[i], "it"});
    d.mentions.push_back({"m" + std::to_string(i), MentionKind::action,
                          static_cast<std::uint32_t>(i), {1, 2}, lemmas[i], {}, {}, lemmas[i]});
  }
  return d;
}

}  // namespace

TEST_CASE("lemma baseline groups by lemma") {
  const Corpus corpus("c", {make_doc("d", "t", {"attack", "attack", "strike"})});
  CHECK(lemma_baseline(corpus) == Clustering({{"d/m0", "d/m1"}, {"d/m2"}}));
  const Corpus distinct("c", {make_doc("d", "t", {"a", "b", "c"})});
  CHECK(lemma_baseline(distinct).size() == 3);
}

TEST_CASE("lemma-delta baseline") {
  const Corpus corpus("c", {make_doc("x", "t", {"win", "lose"}), make_doc("y", "t", {"win"}),
                            make_doc("z", "u", {"lose"})});
  CHECK(lemma_delta(corpus, 1.0) == lemma_baseline(corpus));
  const auto per_doc = lemma_delta(corpus, 0.0);
  CHECK(per_doc.size() == 4);

  std::vector<Document> docs;
  for (int i = 0; i < 3; ++i) {
    auto d = make_doc("s" + std::to_string(i), "t", {"score"});
    d.sentences.push_back({"goal", "match", "referee"});
    docs.push_back(d);
  }
  for (int i = 0; i < 3; ++i) {
    auto d = make_doc("f" + std::to_string(i), "t", {"score"});
    d.sentences.push_back({"stock", "market", "bank"});
    docs.push_back(d);
  }
  const Corpus two("two", docs);
  // vocabularies split the "score" mentions into two document clusters
  CHECK(lemma_delta(two, 0.5).size() == 2);
}

TEST_CASE("lemma-time baseline") {
  const Corpus same("c", {make_doc("a", "t", {"win"}, "2020-01-01"),
                          make_doc("b", "t", {"win"}, "2020-01-01")});
  CHECK(lemma_time(same, 1.0).size() == 1);
  const Corpus apart("c", {make_doc("a", "t", {"win"}, "2020-01-01"),
                           make_doc("b", "t", {"win"}, "2020-01-31")});
  CHECK(lemma_time(apart, 24.0).size() == 2);

  const Corpus tiny = load_corpus(testing::fixture("tiny.json"));
  CHECK(document_time_seconds(tiny.document(0)) == parse_timestamp_seconds("2019-12-30"));
  CHECK(document_time_seconds(tiny.document(1)) == parse_timestamp_seconds("2020-01-02"));
  CHECK_FALSE(document_time_seconds(tiny.document(3)).has_value());
}

TEST_CASE("delta tuning picks a grid value") {
  const Corpus corpus = load_corpus(testing::fixture("synthetic.json"));
  for (BaselineKind kind : {BaselineKind::lemma_delta, BaselineKind::lemma_time}) {
    const auto t = tune_delta(corpus, kind);
    const auto grid = baseline_grid(kind);
    CHECK(std::find(grid.begin(), grid.end(), t.delta) != grid.end());
    const auto score = cross_document_score(corpus, run_baseline(corpus, kind, t.delta));
    CHECK(score.lea.f1 == Approx(t.train_lea_f1));
    CHECK(t.train_lea_f1 >= cross_document_score(corpus, lemma_baseline(corpus)).lea.f1 - 1e-12);
  }
}

TEST_CASE("masking replaces tokens with unique five-letter strings") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  MaskSpec spec;
  spec.components = {"participants"};
  spec.seed = 3;
  const auto masked = mask_corpus(corpus, spec);
  // the participant "a man" spans two tokens
  const auto& s = masked.corpus.document(0).sentences[0];
  const std::regex five("[A-Za-z]{5}");
  CHECK(std::regex_match(s[2], five));
  CHECK(std::regex_match(s[3], five));
  CHECK(s[2] != s[3]);
  std::size_t hits = 0;
  for (const auto& d : masked.corpus.documents())
    for (const auto& sentence : d.sentences)
      for (const auto& t : sentence) hits += (t == s[2]) + (t == s[3]);
  CHECK(hits == 2);
  CHECK(masked.masked_actions.empty());
}

TEST_CASE("masking is deterministic and keeps the structure") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  MaskSpec spec;
  spec.components = {"action", "time", "location", "participants", "publish_date"};
  spec.seed = 11;
  const auto a = mask_corpus(corpus, spec);
  const auto b = mask_corpus(corpus, spec);
  CHECK(serialize_corpus(a.corpus) == serialize_corpus(b.corpus));
  spec.seed = 12;
  CHECK(serialize_corpus(mask_corpus(corpus, spec).corpus) != serialize_corpus(a.corpus));

  CHECK(a.masked_actions.size() == corpus.actions().size());
  for (std::size_t d = 0; d < corpus.documents().size(); ++d) {
    const auto& before = corpus.document(d);
    const auto& after = a.corpus.document(d);
    CHECK(after.doc_id == before.doc_id);
    REQUIRE(after.sentences.size() == before.sentences.size());
    for (std::size_t s = 0; s < before.sentences.size(); ++s)
      CHECK(after.sentences[s].size() == before.sentences[s].size());
    REQUIRE(after.mentions.size() == before.mentions.size());
    for (std::size_t m = 0; m < before.mentions.size(); ++m) {
      CHECK(after.mentions[m].token_span == before.mentions[m].token_span);
      CHECK(after.mentions[m].cluster_id == before.mentions[m].cluster_id);
    }
    CHECK(after.timex.empty());
    CHECK(after.entity_links.empty());
    CHECK_FALSE(after.publish_date.has_value());
    // predicates stay, their masked arguments go
    CHECK(after.srl.size() == before.srl.size());
  }
  // lemmas no longer group anything
  CHECK(lemma_baseline(a.corpus).size() == corpus.actions().size());

  spec.components = {"weather"};
  CHECK_THROWS_AS(mask_corpus(corpus, spec), InvalidArgument);
}

TEST_CASE("search") {
  SearchSpace space = {{"a", {1, 2, 3}}, {"b", {"x", "y"}}};
  CHECK(grid_size(space) == 6);
  int calls = 0;
  const auto planted = [&](const json& p) {
    ++calls;
    return p["a"] == 2 && p["b"] == "y" ? 1.0 : 0.0;
  };
  const auto found = tune(space, 6, 5, planted);
  CHECK(found.best == json{{"a", 2}, {"b", "y"}});
  CHECK(found.trials.size() == 6);
  CHECK(calls == 6);

  const auto again = tune(space, 6, 5, planted);
  const auto other = tune(space, 3, 5, planted);
  CHECK(other.trials.size() == 3);
  for (std::size_t i = 0; i < found.trials.size(); ++i)
    CHECK(found.trials[i].params == again.trials[i].params);

  calls = 0;
  const auto one = tune({{"a", {7}}}, 10, 0, planted);
  CHECK(calls == 0);
  CHECK(one.best == json{{"a", 7}});
  CHECK_FALSE(one.best_score.has_value());
}

TEST_CASE("document folds keep groups together") {
  const Corpus corpus = load_corpus(testing::fixture("synthetic.json"));
  const auto folds = document_folds(corpus, false, 3, 2, 4);
  REQUIRE(folds.size() == 2);
  for (const auto& repeat : folds) {
    CHECK(repeat.size() == 3);
    std::vector<std::size_t> all;
    std::map<std::string, std::size_t> fold_of;
    for (std::size_t f = 0; f < repeat.size(); ++f) {
      for (std::size_t d : repeat[f]) {
        all.push_back(d);
        auto [it, fresh] = fold_of.emplace(corpus.document(d).subtopic, f);
        CHECK(it->second == f);
      }
    }
    std::sort(all.begin(), all.end());
    CHECK(all.size() == corpus.documents().size());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
  CHECK(document_folds(corpus, false, 3, 2, 4) == folds);
}

TEST_CASE("experiment config") {
  const auto config = ExperimentConfig::load(testing::fixture("experiment_synthetic.json"));
  CHECK(config.corpora.size() == 1);
  CHECK(config.seeds.size() == 5);
  CHECK(config.learner.kind == LearnerKind::gradient_boosted_trees);
  const auto again = ExperimentConfig::from_json(config.to_json(), testing::fixture(""));
  CHECK(again.hash() == config.hash());
  CHECK(again.clustering_space.size() == config.clustering_space.size());

  auto j = config.to_json();
  j["sampler"]["k"] = 0;
  CHECK_THROWS(ExperimentConfig::from_json(j, testing::fixture("")).validate());
  j = config.to_json();
  j["cross_dataset"] = {{"train", {{"missing"}}}, {"test", {"synthetic"}}};
  CHECK_THROWS(ExperimentConfig::from_json(j, testing::fixture("")).validate());
  CHECK_THROWS(ExperimentConfig::load(testing::fixture("malformed.json")));
}

TEST_CASE("learner and clustering configs from JSON") {
  const auto l = learner_from_json({{"kind", "logreg"}, {"l2", 0.5}});
  CHECK(l.kind == LearnerKind::linear_logistic);
  CHECK(l.logistic.l2 == 0.5);
  const auto g = learner_from_json({{"kind", "gbt"}, {"max_depth", 2}});
  CHECK(g.gbt.max_depth == 2);
  CHECK(learner_from_json(learner_to_json(g)).gbt.max_depth == 2);
  const auto c = cluster_config_from_json({{"linkage", "single"}, {"threshold", 0.3}});
  CHECK(c.linkage == Linkage::single);
  CHECK(cluster_config_from_json(cluster_config_to_json(c)).threshold == 0.3);
}

TEST_CASE("gold preclustering never lowers LEA precision") {
  const auto config = ExperimentConfig::load(testing::fixture("experiment_synthetic.json"));
  const auto prepared = prepare_corpus(config.corpora[0], config);
  const Corpus& train_set = prepared.splits.train;
  const Corpus& test = prepared.splits.test;
  const auto tfidf = TfIdfModel::fit(train_set);
  const FeatureExtractor fx(train_set, tfidf, &prepared.vectors, config.features);
  const auto pairs = sample_pairs(train_set, config.sampler);
  const auto model = train(TrainingData::from(featurize(fx, pairs.pairs)), config.learner, 0);
  const auto none = predict_corpus(model, config.clustering, test, prepared.vectors,
                                   config.features, PreclusterMode::none, 0, 1);
  const auto gold = predict_corpus(model, config.clustering, test, prepared.vectors,
                                   config.features, PreclusterMode::gold, 0, 1);
  CHECK(cross_document_score(test, gold.response).lea.precision >=
        cross_document_score(test, none.response).lea.precision - 1e-12);
  CHECK(gold.classifier_calls <= none.classifier_calls);
  const std::size_t n = test.actions().size();
  CHECK(none.classifier_calls == n * (n - 1) / 2);
}
