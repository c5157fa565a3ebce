#include <algorithm>
#include <cmath>

#include "cdcr/features.hpp"

namespace cdcr {

namespace {

constexpr const char* kTemporalLevels[] = {
    "document-publish-level", "document-level",
    "srl-level",              "sentence-level",
    "closest-preceding-sentence-level", "closest-overall-level"};
constexpr const char* kTemporalFields[] = {"year", "month", "week", "day", "hour"};
constexpr const char* kSpatialLevels[] = {"document-level", "srl-level", "sentence-level",
                                          "closest-preceding-sentence-level",
                                          "closest-overall-level"};
constexpr const char* kEntityRegions[] = {"action-mention", "semantic-role-args",
                                          "surrounding-sentence", "sentence-context",
                                          "doc-start"};
constexpr const char* kAggregates[] = {"mean", "variance", "min", "max"};

std::string prefixed(FeatureFamily f, const std::string& name) {
  return std::string(to_string(f)) + "/" + name;
}

FeatureValue absent() { return {0.0, false}; }
FeatureValue value(double v) { return {v, true}; }

}  // namespace

std::string_view to_string(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::string_distance: return "string";
    case FeatureFamily::tfidf: return "tfidf";
    case FeatureFamily::sentence_embedding: return "sentence-embedding";
    case FeatureFamily::action_embedding: return "action-embedding";
    case FeatureFamily::spatial: return "spatial";
    case FeatureFamily::temporal: return "temporal";
    case FeatureFamily::wikidata_embedding: return "wikidata-embedding";
  }
  return "string";
}

FeatureFamily feature_family_from_string(std::string_view name) {
  for (FeatureFamily f : kFeatureFamilies) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument("unknown feature family '" + std::string(name) + "'");
}

FeatureToggles FeatureToggles::only(std::span<const FeatureFamily> families) {
  FeatureToggles t;
  t.enabled.fill(false);
  for (FeatureFamily f : families) t.enabled[static_cast<int>(f)] = true;
  return t;
}

std::vector<std::string> feature_names(FeatureFamily family) {
  std::vector<std::string> out;
  auto add = [&](const std::string& n) { out.push_back(prefixed(family, n)); };
  switch (family) {
    case FeatureFamily::string_distance:
      add("is-surface-form-identical");
      add("is-lemma-identical");
      add("surface-form-mlipns-distance");
      add("surface-form-levenshtein-distance");
      break;
    case FeatureFamily::tfidf:
      add("document-similarity");
      add("surrounding-sentence-similarity");
      add("sentence-context-similarity");
      break;
    case FeatureFamily::sentence_embedding:
      add("surrounding-sentence");
      add("doc-start");
      break;
    case FeatureFamily::action_embedding:
      add("action-mention");
      break;
    case FeatureFamily::spatial:
      for (const char* level : kSpatialLevels) {
        add(std::string("distance-") + level + "-geo-hierarchy-match");
        add(std::string("distance-") + level + "-geodesic-distance");
      }
      break;
    case FeatureFamily::temporal:
      for (const char* level : kTemporalLevels) {
        for (const char* field : kTemporalFields) {
          add(std::string("distance-") + level + "-" + field);
        }
      }
      break;
    case FeatureFamily::wikidata_embedding:
      for (const char* region : kEntityRegions) {
        for (const char* agg : kAggregates) add(std::string(region) + "-" + agg);
      }
      break;
  }
  return out;
}

std::vector<std::string> feature_names(const FeatureToggles& toggles) {
  std::vector<std::string> out;
  for (FeatureFamily f : kFeatureFamilies) {
    if (!toggles.on(f)) continue;
    auto names = feature_names(f);
    out.insert(out.end(), names.begin(), names.end());
  }
  return out;
}

FeatureExtractor::FeatureExtractor(const Corpus& corpus, const TfIdfModel& tfidf,
                                   const VectorStore* store, FeatureToggles toggles)
    : corpus_(corpus), toggles_(toggles), names_(feature_names(toggles)) {
  slot_base_.reserve(corpus.documents().size());
  std::uint32_t base = 0;
  for (const Document& d : corpus.documents()) {
    slot_base_.push_back(base);
    base += static_cast<std::uint32_t>(d.mentions.size());
  }
  slot_of_.assign(base, -1);
  profiles_.reserve(corpus.actions().size());

  // Region vectors are shared by all mentions of a document.
  std::vector<SparseVector> sentence_vectors;
  std::vector<SparseVector> context_vectors;
  std::uint32_t cached_doc = UINT32_MAX;
  SparseVector document_vector;

  for (MentionRef ref : corpus.actions()) {
    const Document& doc = corpus.document_of(ref);
    const Mention& m = corpus.mention(ref);
    slot_of_[slot_base_[ref.doc] + ref.mention] = static_cast<std::int32_t>(profiles_.size());
    MentionProfile p;
    p.surface = lowercase(doc.surface(m.location()));
    if (m.lemma) p.lemma = lowercase(*m.lemma);

    if (toggles_.on(FeatureFamily::tfidf)) {
      if (cached_doc != ref.doc) {
        cached_doc = ref.doc;
        document_vector = tfidf.transform(std::span<const Sentence>(doc.sentences));
        sentence_vectors.clear();
        context_vectors.clear();
        const std::size_t n = doc.sentences.size();
        for (std::size_t s = 0; s < n; ++s) {
          sentence_vectors.push_back(tfidf.transform(std::span<const std::string>(doc.sentences[s])));
          const std::size_t lo = s >= 2 ? s - 2 : 0;
          const std::size_t hi = std::min(n, s + 3);
          context_vectors.push_back(
              tfidf.transform(std::span<const Sentence>(doc.sentences.data() + lo, hi - lo)));
        }
      }
      p.document_tfidf = document_vector;
      p.sentence_tfidf = sentence_vectors[m.sentence];
      p.context_tfidf = context_vectors[m.sentence];
    }
    if (toggles_.on(FeatureFamily::temporal)) {
      for (int level = 0; level < 6; ++level) {
        p.time_seconds[level] = resolve_time(doc, m, static_cast<TemporalLevel>(level));
      }
    }
    if (toggles_.on(FeatureFamily::spatial)) {
      for (int level = 0; level < 5; ++level) {
        p.place[level] = resolve_place(doc, m, static_cast<SpatialLevel>(level));
      }
    }
    if (store) {
      p.action_vector = store->get(VectorStore::mention_key(doc.doc_id, m.mention_id));
      p.sentence_vector = store->get(VectorStore::sentence_key(doc.doc_id, m.sentence));
      p.doc_start_vector = store->get(VectorStore::sentence_key(doc.doc_id, 0));
      if (toggles_.on(FeatureFamily::wikidata_embedding)) {
        std::vector<SentenceSpan> args;
        for (const Mention& c : doc.mentions) {
          if (c.anchor && *c.anchor == m.mention_id) args.push_back(c.location());
        }
        for (const SrlFrame& f : doc.srl) {
          if (!f.predicate.overlaps(m.location())) continue;
          for (const SrlArgument& a : f.args) args.push_back(a.span);
        }
        std::array<std::vector<std::string>, 5> ids;
        for (const EntityLink& e : doc.entity_links) {
          const SentenceSpan at = e.location();
          if (at.overlaps(m.location())) ids[0].push_back(e.kb_id);
          if (std::any_of(args.begin(), args.end(),
                          [&](const SentenceSpan& s) { return s.overlaps(at); })) {
            ids[1].push_back(e.kb_id);
          }
          if (e.sentence == m.sentence) ids[2].push_back(e.kb_id);
          if (e.sentence + 2 >= m.sentence && e.sentence <= m.sentence + 2) ids[3].push_back(e.kb_id);
          if (e.sentence < 3) ids[4].push_back(e.kb_id);
        }
        for (int r = 0; r < 5; ++r) {
          std::sort(ids[r].begin(), ids[r].end());
          ids[r].erase(std::unique(ids[r].begin(), ids[r].end()), ids[r].end());
          for (const std::string& id : ids[r]) {
            if (auto v = store->get(VectorStore::kb_key(id))) p.kb_sets[r].push_back(*v);
          }
        }
      }
    }
    profiles_.push_back(std::move(p));
  }
}

std::size_t FeatureExtractor::slot(MentionRef ref) const {
  if (ref.doc >= slot_base_.size()) throw NotFoundError("mention reference outside corpus");
  const std::size_t index = slot_base_[ref.doc] + ref.mention;
  if (index >= slot_of_.size() || slot_of_[index] < 0) {
    throw InvalidArgument("features are defined for action mentions only");
  }
  return static_cast<std::size_t>(slot_of_[index]);
}

const MentionProfile& FeatureExtractor::profile(MentionRef ref) const {
  return profiles_[slot(ref)];
}

std::vector<NamedFeature> FeatureExtractor::string_features(MentionRef a, MentionRef b) const {
  const auto names = feature_names(FeatureFamily::string_distance);
  const MentionProfile& pa = profile(a);
  const MentionProfile& pb = profile(b);
  FeatureValue lemma_identical = absent();
  if (pa.lemma && pb.lemma) lemma_identical = value(*pa.lemma == *pb.lemma ? 1.0 : 0.0);
  return {{names[0], value(pa.surface == pb.surface ? 1.0 : 0.0)},
          {names[1], lemma_identical},
          {names[2], value(mlipns_distance(pa.surface, pb.surface))},
          {names[3], value(static_cast<double>(levenshtein(pa.surface, pb.surface)))}};
}

std::vector<NamedFeature> FeatureExtractor::tfidf_features(MentionRef a, MentionRef b) const {
  const auto names = feature_names(FeatureFamily::tfidf);
  const MentionProfile& pa = profile(a);
  const MentionProfile& pb = profile(b);
  auto sim = [](const SparseVector& x, const SparseVector& y) {
    return x.empty() || y.empty() ? absent() : value(cosine(x, y));
  };
  return {{names[0], sim(pa.document_tfidf, pb.document_tfidf)},
          {names[1], sim(pa.sentence_tfidf, pb.sentence_tfidf)},
          {names[2], sim(pa.context_tfidf, pb.context_tfidf)}};
}

namespace {

FeatureValue dense_similarity(const std::optional<std::span<const float>>& x,
                              const std::optional<std::span<const float>>& y) {
  if (!x || !y) return absent();
  return value(std::clamp(cosine(*x, *y), 0.0, 1.0));
}

}  // namespace

std::vector<NamedFeature> FeatureExtractor::sentence_embedding_features(MentionRef a,
                                                                        MentionRef b) const {
  const auto names = feature_names(FeatureFamily::sentence_embedding);
  const MentionProfile& pa = profile(a);
  const MentionProfile& pb = profile(b);
  return {{names[0], dense_similarity(pa.sentence_vector, pb.sentence_vector)},
          {names[1], dense_similarity(pa.doc_start_vector, pb.doc_start_vector)}};
}

std::vector<NamedFeature> FeatureExtractor::action_embedding_features(MentionRef a,
                                                                      MentionRef b) const {
  const auto names = feature_names(FeatureFamily::action_embedding);
  return {{names[0], dense_similarity(profile(a).action_vector, profile(b).action_vector)}};
}

std::vector<NamedFeature> FeatureExtractor::temporal_features(MentionRef a, MentionRef b) const {
  const auto names = feature_names(FeatureFamily::temporal);
  const MentionProfile& pa = profile(a);
  const MentionProfile& pb = profile(b);
  std::vector<NamedFeature> out;
  out.reserve(names.size());
  for (int level = 0; level < 6; ++level) {
    const auto& ta = pa.time_seconds[level];
    const auto& tb = pb.time_seconds[level];
    std::array<std::int64_t, 5> fields{};
    if (ta && tb) fields = temporal_distance_fields(*ta, *tb);
    for (int f = 0; f < 5; ++f) {
      out.push_back({names[level * 5 + f],
                     ta && tb ? value(static_cast<double>(fields[f])) : absent()});
    }
  }
  return out;
}

std::vector<NamedFeature> FeatureExtractor::spatial_features(MentionRef a, MentionRef b) const {
  const auto names = feature_names(FeatureFamily::spatial);
  const MentionProfile& pa = profile(a);
  const MentionProfile& pb = profile(b);
  std::vector<NamedFeature> out;
  for (int level = 0; level < 5; ++level) {
    const EntityLink* la = pa.place[level];
    const EntityLink* lb = pb.place[level];
    FeatureValue hierarchy = absent(), distance = absent();
    if (la && lb) {
      if (auto steps = geo_hierarchy_match(*la, *lb)) hierarchy = value(*steps);
      if (la->has_coordinates() && lb->has_coordinates()) {
        distance = value(geodesic_km(*la->lat, *la->lon, *lb->lat, *lb->lon));
      }
    }
    out.push_back({names[level * 2], hierarchy});
    out.push_back({names[level * 2 + 1], distance});
  }
  return out;
}

std::vector<NamedFeature> FeatureExtractor::wikidata_features(MentionRef a, MentionRef b) const {
  const auto names = feature_names(FeatureFamily::wikidata_embedding);
  const MentionProfile& pa = profile(a);
  const MentionProfile& pb = profile(b);
  std::vector<NamedFeature> out;
  for (int r = 0; r < 5; ++r) {
    const auto& xs = pa.kb_sets[r];
    const auto& ys = pb.kb_sets[r];
    if (xs.empty() || ys.empty()) {
      for (int k = 0; k < 4; ++k) out.push_back({names[r * 4 + k], absent()});
      continue;
    }
    std::vector<double> sims;
    sims.reserve(xs.size() * ys.size());
    for (const auto& x : xs) {
      for (const auto& y : ys) sims.push_back(std::clamp(cosine(x, y), 0.0, 1.0));
    }
    // Sum in a canonical order so swapping the mentions is bit-identical.
    std::sort(sims.begin(), sims.end());
    double sum = 0.0;
    for (double s : sims) sum += s;
    const double mean = sum / sims.size();
    double var = 0.0;
    for (double s : sims) var += (s - mean) * (s - mean);
    var /= sims.size();
    out.push_back({names[r * 4 + 0], value(mean)});
    out.push_back({names[r * 4 + 1], value(var)});
    out.push_back({names[r * 4 + 2], value(sims.front())});
    out.push_back({names[r * 4 + 3], value(sims.back())});
  }
  return out;
}

FeatureVector FeatureExtractor::extract(MentionRef a, MentionRef b) const {
  FeatureVector fv;
  fv.values.reserve(names_.size());
  fv.present.reserve(names_.size());
  auto append = [&](const std::vector<NamedFeature>& family) {
    for (const NamedFeature& f : family) {
      fv.values.push_back(f.value.present ? f.value.value : 0.0);
      fv.present.push_back(f.value.present ? 1 : 0);
    }
  };
  for (FeatureFamily f : kFeatureFamilies) {
    if (!toggles_.on(f)) continue;
    switch (f) {
      case FeatureFamily::string_distance: append(string_features(a, b)); break;
      case FeatureFamily::tfidf: append(tfidf_features(a, b)); break;
      case FeatureFamily::sentence_embedding: append(sentence_embedding_features(a, b)); break;
      case FeatureFamily::action_embedding: append(action_embedding_features(a, b)); break;
      case FeatureFamily::spatial: append(spatial_features(a, b)); break;
      case FeatureFamily::temporal: append(temporal_features(a, b)); break;
      case FeatureFamily::wikidata_embedding: append(wikidata_features(a, b)); break;
    }
  }
  return fv;
}

FeatureVector FeatureExtractor::extract(std::string_view key_a, std::string_view key_b) const {
  return extract(corpus_.at(key_a), corpus_.at(key_b));
}

}  // namespace cdcr
