#include <fstream>
#include <sstream>

#include "cdcr/corpus.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdcr;

namespace {

std::array<std::uint64_t, 4> brute_links(const Corpus& corpus) {
  std::array<std::uint64_t, 4> out{};
  std::vector<std::pair<const Document*, const Mention*>> actions;
  for (const auto& doc : corpus.documents())
    for (const auto& m : doc.mentions)
      if (m.is_action()) actions.emplace_back(&doc, &m);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (std::size_t j = i + 1; j < actions.size(); ++j) {
      const auto [da, ma] = actions[i];
      const auto [db, mb] = actions[j];
      if (!ma->cluster_id || !mb->cluster_id || *ma->cluster_id != *mb->cluster_id) continue;
      int t = 3;
      if (da == db) t = 0;
      else if (da->subtopic == db->subtopic) t = 1;
      else if (da->topic == db->topic) t = 2;
      ++out[t];
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("exporter schema: every bundled corpus validates") {
  for (const char* name : {"tiny.json", "synthetic.json", "fcc_shaped.json", "gvc_shaped.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_corpus(testing::fixture(name)));
  }
}

TEST_CASE("invalid inputs fail with specific errors") {
  CHECK_THROWS_AS(load_corpus(testing::fixture("invalid_anchor.json")), ValidationError);
  CHECK_THROWS_AS(load_corpus(testing::fixture("invalid_span.json")), ValidationError);
  CHECK_THROWS_AS(load_corpus(testing::fixture("malformed.json")), ParseError);
  CHECK_THROWS_AS(load_corpus(testing::fixture("does_not_exist.json")), IoError);
  CHECK_THROWS_AS(parse_corpus(R"({"corpus_id":"x"})"), Error);
}

TEST_CASE("link counts match exhaustive pair enumeration") {
  for (const char* name : {"tiny.json", "synthetic.json", "fcc_shaped.json", "gvc_shaped.json"}) {
    CAPTURE(name);
    const Corpus corpus = load_corpus(testing::fixture(name));
    CHECK(corpus_stats(corpus).coreferring_links == brute_links(corpus));
  }
}

TEST_CASE("tiny corpus statistics") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  const auto s = corpus_stats(corpus);
  CHECK(s.topics == 2);
  CHECK(s.subtopics == 3);
  CHECK(s.documents == 4);
  CHECK(s.event_mentions == 7);
  CHECK(s.clusters == 5);
  CHECK(s.coreferring_links == std::array<std::uint64_t, 4>{1, 2, 0, 0});
  std::uint64_t all = 0;
  for (int t = 0; t < 4; ++t) all += s.coreferring_links[t] + s.non_coreferring_pairs[t];
  CHECK(all == 7 * 6 / 2);
}

TEST_CASE("keys, lookups and link types") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  CHECK(corpus.actions().size() == 7);
  const MentionRef r = corpus.at("a1/m2");
  CHECK(corpus.key(r) == "a1/m2");
  CHECK(corpus.cluster_of(r) == "arrest1");
  CHECK(corpus.coreferent(r, corpus.at("a2/m1")));
  CHECK_FALSE(corpus.coreferent(r, corpus.at("a3/m1")));
  CHECK(link_type(corpus, "a1/m1", "a1/m2") == LinkType::within_document);
  CHECK(link_type(corpus, "a1/m1", "a2/m1") == LinkType::within_subtopic);
  CHECK(link_type(corpus, "a1/m1", "a3/m1") == LinkType::cross_subtopic);
  CHECK(link_type(corpus, "a1/m1", "b1/m1") == LinkType::cross_topic);
  CHECK(corpus.mention(corpus.at("a1/p1")).kind == MentionKind::participant);
  CHECK_THROWS_AS(corpus.at("a1/zz"), NotFoundError);
  CHECK_FALSE(corpus.find("zz/m1").has_value());
}

TEST_CASE("serialization round trip is lossless") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  const auto dir = testing::scratch_dir("corpus");
  save_corpus(corpus, dir / "tiny.json");
  const Corpus back = load_corpus(dir / "tiny.json");
  CHECK(back == corpus);
  save_corpus(back, dir / "again.json");
  CHECK(read_file(dir / "tiny.json") == read_file(dir / "again.json"));
}

TEST_CASE("splits") {
  const Corpus corpus = load_corpus(testing::fixture("tiny.json"));
  SplitSpec spec = SplitSpec::from_json_text(
      R"({"mode":"explicit","train":["a1","a2"],"dev":["a3"],"test":["b1"]})");
  const auto s = split_corpus(corpus, spec);
  CHECK(s.train.documents().size() == 2);
  CHECK(s.dev.documents().size() == 1);
  CHECK(s.test.documents()[0].doc_id == "b1");

  const auto by_topic = split_corpus(
      corpus, SplitSpec::from_json_text(R"({"mode":"by_topic","train":["A"],"dev":[],"test":["B"]})"));
  CHECK(by_topic.train.documents().size() == 3);
  CHECK(by_topic.dev.documents().empty());

  // overlap and unknown ids are rejected
  CHECK_THROWS(split_corpus(corpus, SplitSpec::from_json_text(
                                        R"({"mode":"explicit","train":["a1"],"dev":["a1"],"test":[]})")));
  CHECK_THROWS(split_corpus(corpus, SplitSpec::from_json_text(
                                        R"({"mode":"explicit","train":["zz"],"dev":[],"test":[]})")));

  const Corpus synthetic = load_corpus(testing::fixture("synthetic.json"));
  const auto pct = split_corpus(
      synthetic, SplitSpec::from_json_text(R"({"mode":"percent","train":50,"dev":25,"test":25,"seed":3})"));
  CHECK(pct.train.documents().size() + pct.dev.documents().size() + pct.test.documents().size() ==
        synthetic.documents().size());
  // whole subtopics stay together
  std::map<std::string, int> owner;
  int part = 0;
  for (const Corpus* c : {&pct.train, &pct.dev, &pct.test}) {
    for (const auto& d : c->documents()) {
      auto [it, fresh] = owner.emplace(d.subtopic, part);
      CHECK(it->second == part);
    }
    ++part;
  }
}

TEST_CASE("merged corpora add their link counts") {
  const Corpus a = load_corpus(testing::fixture("tiny.json"));
  const Corpus b = load_corpus(testing::fixture("gvc_shaped.json"));
  const Corpus m = merge_corpora({a, b});
  const auto sa = corpus_stats(a), sb = corpus_stats(b), sm = corpus_stats(m);
  for (int t = 0; t < 4; ++t) {
    CHECK(sm.coreferring_links[t] == sa.coreferring_links[t] + sb.coreferring_links[t]);
  }
  CHECK(sm.documents == sa.documents + sb.documents);
  CHECK(m.find("tiny:a1/m1").has_value());
}

TEST_CASE("superimposed mentions") {
  std::vector<Document> docs(1);
  auto& d = docs[0];
  d.doc_id = "d";
  d.topic = "t";
  d.subtopic = "s";
  d.sentences = {{"they", "fought", "and", "won"}};
  Mention a{"x", MentionKind::action, 0, {1, 2}, "c1", {}, {}, "fight"};
  Mention b{"y", MentionKind::action, 0, {1, 2}, "c2", {}, {}, "fight"};
  Mention c{"z", MentionKind::action, 0, {3, 4}, "c3", {}, {}, "win"};
  Mention p{"p", MentionKind::participant, 0, {0, 1}, {}, "x", {}, {}};
  d.mentions = {a, b, c, p};
  const Corpus corpus("s", docs);
  CHECK(corpus.superimposed().size() == 2);
  const Corpus clean = drop_superimposed(corpus);
  CHECK(clean.actions().size() == 1);
  CHECK(clean.documents()[0].mentions.size() == 1);
}

TEST_CASE("timestamps") {
  CHECK(parse_timestamp_seconds("1970-01-02") == 86400);
  CHECK(parse_timestamp_seconds("1970-01-01T01:30") == 5400);
  CHECK(parse_timestamp_seconds("1970-01-01T00:00:07") == 7);
  CHECK_FALSE(parse_timestamp_seconds("yesterday").has_value());
  CHECK(format_minutes(90) == "1970-01-01T01:30");
}
