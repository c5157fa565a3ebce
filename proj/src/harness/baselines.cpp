#include <algorithm>
#include <cmath>

#include "cdcr/harness.hpp"

namespace cdcr {

namespace {

std::string lemma_of(const Corpus& corpus, MentionRef ref) {
  const Mention& m = corpus.mention(ref);
  if (!m.lemma || m.lemma->empty()) {
    throw ValidationError("action mention '" + corpus.key(ref) + "' has no lemma");
  }
  return lowercase(*m.lemma);
}

Clustering documents_by_distance(const Corpus& corpus,
                                 const std::function<double(std::size_t, std::size_t)>& distance,
                                 double threshold) {
  std::vector<std::string> ids;
  for (const Document& d : corpus.documents()) ids.push_back(d.doc_id);
  DistanceMatrix m(ids);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) m.set(i, j, distance(i, j));
  }
  ClusterConfig config;
  config.linkage = Linkage::average;
  config.criterion = Criterion::distance;
  config.threshold = threshold;
  return agglomerative(m, config);
}

}  // namespace

Clustering lemma_baseline(const Corpus& corpus) {
  std::vector<std::string> keys, labels;
  for (MentionRef ref : corpus.actions()) {
    keys.push_back(corpus.key(ref));
    labels.push_back(lemma_of(corpus, ref));
  }
  return Clustering::from_labels(keys, labels);
}

Clustering lemma_within(const Corpus& corpus, const Clustering& document_clusters) {
  const auto doc_cluster = document_clusters.index();
  std::vector<std::string> keys;
  std::vector<std::pair<std::size_t, std::string>> labels;
  for (MentionRef ref : corpus.actions()) {
    const std::string& doc = corpus.document_of(ref).doc_id;
    auto it = doc_cluster.find(doc);
    if (it == doc_cluster.end()) throw NotFoundError("document '" + doc + "' is unclustered");
    keys.push_back(corpus.key(ref));
    labels.emplace_back(it->second, lemma_of(corpus, ref));
  }
  return Clustering::from_labels(keys, labels);
}

Clustering lemma_delta(const Corpus& corpus, double delta) {
  const TfIdfModel tfidf = TfIdfModel::fit(corpus);
  std::vector<SparseVector> vectors;
  for (const Document& d : corpus.documents()) {
    vectors.push_back(tfidf.transform(std::span<const Sentence>(d.sentences)));
  }
  const auto docs = documents_by_distance(
      corpus, [&](std::size_t i, std::size_t j) { return 1.0 - cosine(vectors[i], vectors[j]); },
      std::clamp(delta, 0.0, 1.0));
  return lemma_within(corpus, docs);
}

std::optional<std::int64_t> document_time_seconds(const Document& doc) {
  const TimexSpan* first = nullptr;
  std::optional<std::int64_t> first_value;
  for (const TimexSpan& t : doc.timex) {
    auto value = parse_timestamp_seconds(t.value);
    if (!value) continue;
    if (!first || std::pair(t.sentence, t.token_span.start) <
                      std::pair(first->sentence, first->token_span.start)) {
      first = &t;
      first_value = value;
    }
  }
  if (first_value) return first_value;
  if (doc.publish_date) return doc.publish_date->minutes_since_epoch * 60;
  return std::nullopt;
}

Clustering lemma_time(const Corpus& corpus, double delta_hours) {
  std::vector<std::optional<std::int64_t>> times;
  double widest = 0.0;
  for (const Document& d : corpus.documents()) times.push_back(document_time_seconds(d));
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      if (times[i] && times[j]) {
        widest = std::max(widest, std::abs(static_cast<double>(*times[i] - *times[j])) / 3600.0);
      }
    }
  }
  // Hours are rescaled so every dated pair lands in [0, 0.5] and undated
  // documents sit at distance 1, out of reach of any threshold.
  const double scale = 2.0 * std::max({widest, delta_hours, 1.0});
  const auto docs = documents_by_distance(
      corpus,
      [&](std::size_t i, std::size_t j) {
        if (!times[i] || !times[j]) return 1.0;
        return std::abs(static_cast<double>(*times[i] - *times[j])) / 3600.0 / scale;
      },
      delta_hours / scale);
  return lemma_within(corpus, docs);
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::lemma: return "lemma";
    case BaselineKind::lemma_delta: return "lemma-delta";
    case BaselineKind::lemma_time: return "lemma-time";
  }
  return "lemma";
}

BaselineKind baseline_kind_from_string(std::string_view name) {
  if (name == "lemma") return BaselineKind::lemma;
  if (name == "lemma-delta") return BaselineKind::lemma_delta;
  if (name == "lemma-time") return BaselineKind::lemma_time;
  throw InvalidArgument("unknown baseline '" + std::string(name) + "'");
}

std::vector<double> baseline_grid(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::lemma: return {0.0};
    case BaselineKind::lemma_delta: {
      std::vector<double> grid;
      for (int i = 1; i <= 19; ++i) grid.push_back(i * 0.05);
      return grid;
    }
    case BaselineKind::lemma_time: return {6, 12, 24, 48, 96, 168, 336, 672};
  }
  return {};
}

Clustering run_baseline(const Corpus& corpus, BaselineKind kind, double delta) {
  switch (kind) {
    case BaselineKind::lemma: return lemma_baseline(corpus);
    case BaselineKind::lemma_delta: return lemma_delta(corpus, delta);
    case BaselineKind::lemma_time: return lemma_time(corpus, delta);
  }
  return lemma_baseline(corpus);
}

BaselineTuning tune_delta(const Corpus& train, BaselineKind kind) {
  BaselineTuning best;
  bool first = true;
  for (double delta : baseline_grid(kind)) {
    const double f1 = cross_document_score(train, run_baseline(train, kind, delta)).lea.f1;
    if (first || f1 > best.train_lea_f1) {
      best = {delta, f1};
      first = false;
    }
  }
  return best;
}

}  // namespace cdcr
