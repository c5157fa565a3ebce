#include "cdcr/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cdcr/random.hpp"

namespace cdcr {

std::string_view to_string(MentionKind kind) {
  switch (kind) {
    case MentionKind::action: return "action";
    case MentionKind::participant: return "participant";
    case MentionKind::time: return "time";
    case MentionKind::location: return "location";
  }
  return "action";
}

MentionKind mention_kind_from_string(std::string_view name) {
  if (name == "action") return MentionKind::action;
  if (name == "participant") return MentionKind::participant;
  if (name == "time") return MentionKind::time;
  if (name == "location") return MentionKind::location;
  throw ValidationError("unknown mention kind '" + std::string(name) + "'");
}

std::string_view to_string(SrlRole role) {
  switch (role) {
    case SrlRole::participant: return "participant";
    case SrlRole::time: return "time";
    case SrlRole::location: return "location";
  }
  return "participant";
}

SrlRole srl_role_from_string(std::string_view name) {
  if (name == "participant") return SrlRole::participant;
  if (name == "time") return SrlRole::time;
  if (name == "location") return SrlRole::location;
  throw ValidationError("unknown SRL role '" + std::string(name) + "'");
}

std::string_view to_string(LinkType type) {
  switch (type) {
    case LinkType::within_document: return "within-document";
    case LinkType::within_subtopic: return "within-subtopic";
    case LinkType::cross_subtopic: return "cross-subtopic";
    case LinkType::cross_topic: return "cross-topic";
  }
  return "within-document";
}

LinkType link_type_from_string(std::string_view name) {
  for (LinkType t : kLinkTypes) {
    if (to_string(t) == name) return t;
  }
  throw InvalidArgument("unknown link type '" + std::string(name) + "'");
}

const Mention* Document::find_mention(std::string_view mention_id) const {
  for (const Mention& m : mentions) {
    if (m.mention_id == mention_id) return &m;
  }
  return nullptr;
}

std::string Document::surface(const SentenceSpan& span) const {
  const Sentence& sentence = sentences.at(span.sentence);
  std::string out;
  for (std::uint32_t i = span.tokens.start; i < span.tokens.end && i < sentence.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += sentence[i];
  }
  return out;
}

Corpus::Corpus(std::string corpus_id, std::vector<Document> documents)
    : corpus_id_(std::move(corpus_id)), documents_(std::move(documents)) {
  validate();
  build_index();
}

namespace {

std::string where(std::size_t doc, const char* list, std::size_t item) {
  std::ostringstream os;
  os << "documents[" << doc << "]." << list << "[" << item << "]";
  return os.str();
}

void check_span(const Document& d, const SentenceSpan& s, const std::string& at) {
  if (s.sentence >= d.sentences.size()) {
    throw ValidationError(at + ": sentence index " + std::to_string(s.sentence) +
                          " out of range (document '" + d.doc_id + "' has " +
                          std::to_string(d.sentences.size()) + " sentences)");
  }
  if (s.tokens.start >= s.tokens.end) {
    throw ValidationError(at + ": empty or inverted token span [" +
                          std::to_string(s.tokens.start) + "," +
                          std::to_string(s.tokens.end) + ")");
  }
  if (s.tokens.end > d.sentences[s.sentence].size()) {
    throw ValidationError(at + ": token span end " + std::to_string(s.tokens.end) +
                          " exceeds sentence length " +
                          std::to_string(d.sentences[s.sentence].size()));
  }
}

}  // namespace

void Corpus::validate() const {
  std::unordered_set<std::string> doc_ids;
  for (std::size_t di = 0; di < documents_.size(); ++di) {
    const Document& d = documents_[di];
    if (d.doc_id.empty()) {
      throw ValidationError("documents[" + std::to_string(di) + "]: empty doc_id");
    }
    if (!doc_ids.insert(d.doc_id).second) {
      throw ValidationError("documents[" + std::to_string(di) + "]: duplicate doc_id '" +
                            d.doc_id + "'");
    }
    std::unordered_map<std::string, const Mention*> ids;
    for (std::size_t mi = 0; mi < d.mentions.size(); ++mi) {
      const Mention& m = d.mentions[mi];
      const std::string at = where(di, "mentions", mi);
      if (m.mention_id.empty()) throw ValidationError(at + ": empty mention_id");
      if (!ids.emplace(m.mention_id, &m).second) {
        throw ValidationError(at + ": duplicate mention_id '" + m.mention_id + "'");
      }
      check_span(d, m.location(), at);
      if (m.is_action() && m.anchor) {
        throw ValidationError(at + ": action mention '" + m.mention_id + "' has an anchor");
      }
      if (!m.is_action() && m.cluster_id) {
        throw ValidationError(at + ": non-action mention '" + m.mention_id +
                              "' has a cluster_id");
      }
      if (m.cluster_id && m.cluster_id->empty()) {
        throw ValidationError(at + ": empty cluster_id");
      }
    }
    for (std::size_t mi = 0; mi < d.mentions.size(); ++mi) {
      const Mention& m = d.mentions[mi];
      if (!m.anchor) continue;
      auto it = ids.find(*m.anchor);
      if (it == ids.end() || !it->second->is_action()) {
        throw ValidationError(where(di, "mentions", mi) + ": anchor '" + *m.anchor +
                              "' does not name an action mention in document '" +
                              d.doc_id + "'");
      }
    }
    for (std::size_t ti = 0; ti < d.timex.size(); ++ti) {
      const std::string at = where(di, "timex", ti);
      check_span(d, d.timex[ti].location(), at);
      if (!parse_timestamp_seconds(d.timex[ti].value)) {
        throw ValidationError(at + ": unparseable timex value '" + d.timex[ti].value + "'");
      }
    }
    for (std::size_t ei = 0; ei < d.entity_links.size(); ++ei) {
      const EntityLink& e = d.entity_links[ei];
      const std::string at = where(di, "entity_links", ei);
      check_span(d, e.location(), at);
      if (e.kb_id.empty()) throw ValidationError(at + ": empty kb_id");
      if (e.lat.has_value() != e.lon.has_value()) {
        throw ValidationError(at + ": lat and lon must be given together");
      }
      if (e.lat && (*e.lat < -90.0 || *e.lat > 90.0)) {
        throw ValidationError(at + ": lat outside [-90, 90]");
      }
      if (e.lon && (*e.lon < -180.0 || *e.lon > 180.0)) {
        throw ValidationError(at + ": lon outside [-180, 180]");
      }
    }
    for (std::size_t si = 0; si < d.srl.size(); ++si) {
      const std::string at = where(di, "srl", si);
      check_span(d, d.srl[si].predicate, at + ".predicate");
      for (std::size_t ai = 0; ai < d.srl[si].args.size(); ++ai) {
        check_span(d, d.srl[si].args[ai].span, at + ".args[" + std::to_string(ai) + "]");
      }
    }
  }
}

void Corpus::build_index() {
  actions_.clear();
  for (std::uint32_t di = 0; di < documents_.size(); ++di) {
    const Document& d = documents_[di];
    by_doc_id_.emplace(d.doc_id, di);
    std::vector<MentionRef> local;
    for (std::uint32_t mi = 0; mi < d.mentions.size(); ++mi) {
      by_key_.emplace(d.doc_id + "/" + d.mentions[mi].mention_id, MentionRef{di, mi});
      if (d.mentions[mi].is_action()) local.push_back({di, mi});
    }
    std::stable_sort(local.begin(), local.end(), [&](MentionRef a, MentionRef b) {
      const Mention& ma = d.mentions[a.mention];
      const Mention& mb = d.mentions[b.mention];
      if (ma.sentence != mb.sentence) return ma.sentence < mb.sentence;
      return ma.token_span.start < mb.token_span.start;
    });
    for (std::size_t i = 0; i < local.size(); ++i) {
      for (std::size_t j = 0; j < local.size(); ++j) {
        if (i != j && d.mentions[local[i].mention].location() ==
                          d.mentions[local[j].mention].location()) {
          superimposed_.push_back(local[i]);
          break;
        }
      }
    }
    actions_.insert(actions_.end(), local.begin(), local.end());
  }
}

std::optional<std::size_t> Corpus::document_index(std::string_view doc_id) const {
  auto it = by_doc_id_.find(std::string(doc_id));
  if (it == by_doc_id_.end()) return std::nullopt;
  return it->second;
}

const Mention& Corpus::mention(MentionRef ref) const {
  return documents_.at(ref.doc).mentions.at(ref.mention);
}

std::string Corpus::key(MentionRef ref) const {
  return documents_.at(ref.doc).doc_id + "/" + mention(ref).mention_id;
}

std::optional<MentionRef> Corpus::find(std::string_view key) const {
  auto it = by_key_.find(std::string(key));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

MentionRef Corpus::at(std::string_view key) const {
  auto ref = find(key);
  if (!ref) throw NotFoundError("unknown mention '" + std::string(key) + "'");
  return *ref;
}

std::string Corpus::cluster_of(MentionRef ref) const {
  const Mention& m = mention(ref);
  if (m.cluster_id) return *m.cluster_id;
  return "\x1f" + key(ref);
}

bool Corpus::coreferent(MentionRef a, MentionRef b) const {
  const Mention& ma = mention(a);
  const Mention& mb = mention(b);
  return ma.cluster_id && mb.cluster_id && *ma.cluster_id == *mb.cluster_id;
}

LinkType link_type(const Corpus& corpus, MentionRef a, MentionRef b) {
  if (a.doc == b.doc) return LinkType::within_document;
  const Document& da = corpus.document(a.doc);
  const Document& db = corpus.document(b.doc);
  if (da.topic != db.topic) return LinkType::cross_topic;
  if (da.subtopic == db.subtopic) return LinkType::within_subtopic;
  return LinkType::cross_subtopic;
}

LinkType link_type(const Corpus& corpus, std::string_view key_a, std::string_view key_b) {
  const MentionRef a = corpus.at(key_a);
  const MentionRef b = corpus.at(key_b);
  if (!corpus.mention(a).is_action() || !corpus.mention(b).is_action()) {
    throw InvalidArgument("link types are defined for action mentions only");
  }
  return link_type(corpus, a, b);
}

std::uint64_t StatsReport::total_links() const {
  std::uint64_t sum = 0;
  for (auto v : coreferring_links) sum += v;
  return sum;
}

namespace {

std::uint64_t choose2(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/// Pair counts by link type among a set of mentions, via nested group sizes.
std::array<std::uint64_t, 4> pair_counts(const Corpus& corpus,
                                         const std::vector<MentionRef>& refs) {
  std::map<std::string, std::uint64_t> topic_n;
  std::map<std::pair<std::string, std::string>, std::uint64_t> sub_n;
  std::map<std::uint32_t, std::uint64_t> doc_n;
  for (MentionRef r : refs) {
    const Document& d = corpus.document(r.doc);
    ++topic_n[d.topic];
    ++sub_n[{d.topic, d.subtopic}];
    ++doc_n[r.doc];
  }
  std::uint64_t all = choose2(refs.size()), same_topic = 0, same_sub = 0, same_doc = 0;
  for (auto& [_, n] : topic_n) same_topic += choose2(n);
  for (auto& [_, n] : sub_n) same_sub += choose2(n);
  for (auto& [_, n] : doc_n) same_doc += choose2(n);
  return {same_doc, same_sub - same_doc, same_topic - same_sub, all - same_topic};
}

}  // namespace

StatsReport corpus_stats(const Corpus& corpus) {
  StatsReport r;
  std::set<std::string> topics;
  std::set<std::pair<std::string, std::string>> subtopics;
  for (const Document& d : corpus.documents()) {
    topics.insert(d.topic);
    subtopics.insert({d.topic, d.subtopic});
    r.sentences += d.sentences.size();
  }
  r.topics = topics.size();
  r.subtopics = subtopics.size();
  r.documents = corpus.documents().size();
  r.event_mentions = corpus.actions().size();

  std::map<std::string, std::vector<MentionRef>> clusters;
  for (MentionRef ref : corpus.actions()) clusters[corpus.cluster_of(ref)].push_back(ref);
  r.clusters = clusters.size();
  for (auto& [_, members] : clusters) {
    if (members.size() == 1) ++r.singletons;
    auto counts = pair_counts(corpus, members);
    for (std::size_t t = 0; t < 4; ++t) r.coreferring_links[t] += counts[t];
  }
  auto all = pair_counts(corpus, corpus.actions());
  for (std::size_t t = 0; t < 4; ++t) {
    r.non_coreferring_pairs[t] = all[t] - r.coreferring_links[t];
  }
  return r;
}

Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& doc_indices,
              const std::string& corpus_id) {
  std::vector<Document> docs;
  docs.reserve(doc_indices.size());
  for (std::size_t i : doc_indices) docs.push_back(corpus.document(i));
  return Corpus(corpus_id, std::move(docs));
}

CorpusSplits split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  const std::size_t n = corpus.documents().size();
  std::vector<int> assignment(n, -1);

  auto assign = [&](std::size_t doc, int part) {
    if (assignment[doc] != -1 && assignment[doc] != part) {
      throw ValidationError("split spec assigns document '" + corpus.document(doc).doc_id +
                            "' to more than one split");
    }
    assignment[doc] = part;
  };

  switch (spec.mode) {
    case SplitSpec::Mode::explicit_lists:
      for (int part = 0; part < 3; ++part) {
        for (const std::string& id : spec.members[part]) {
          auto idx = corpus.document_index(id);
          if (!idx) throw NotFoundError("split spec references unknown document '" + id + "'");
          assign(*idx, part);
        }
      }
      break;
    case SplitSpec::Mode::by_topic: {
      std::set<std::string> known;
      for (const Document& d : corpus.documents()) {
        known.insert(spec.group_by_subtopic ? d.subtopic : d.topic);
      }
      for (int part = 0; part < 3; ++part) {
        for (const std::string& label : spec.members[part]) {
          if (!known.count(label)) {
            throw NotFoundError("split spec references unknown " +
                                std::string(spec.group_by_subtopic ? "subtopic" : "topic") +
                                " '" + label + "'");
          }
          for (std::size_t i = 0; i < n; ++i) {
            const Document& d = corpus.document(i);
            if ((spec.group_by_subtopic ? d.subtopic : d.topic) == label) assign(i, part);
          }
        }
      }
      break;
    }
    case SplitSpec::Mode::percent: {
      std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < n; ++i) {
        const Document& d = corpus.document(i);
        groups[{d.topic, d.subtopic}].push_back(i);
      }
      std::vector<std::vector<std::size_t>> order;
      for (auto& [_, docs] : groups) order.push_back(docs);
      Rng rng(spec.seed);
      shuffle(order, rng);
      const double total = spec.percent[0] + spec.percent[1] + spec.percent[2];
      if (!(total > 0)) throw InvalidArgument("split percentages must sum to a positive value");
      const double train_cut = n * spec.percent[0] / total;
      const double dev_cut = n * (spec.percent[0] + spec.percent[1]) / total;
      std::size_t placed = 0;
      for (const auto& docs : order) {
        const double mid = placed + docs.size() / 2.0;
        const int part = mid < train_cut ? 0 : (mid < dev_cut ? 1 : 2);
        for (std::size_t i : docs) assign(i, part);
        placed += docs.size();
      }
      break;
    }
  }

  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment[i] < 0) {
      throw ValidationError("split spec does not assign document '" +
                            corpus.document(i).doc_id + "'");
    }
    parts[assignment[i]].push_back(i);
  }
  return {subset(corpus, parts[0], corpus.id() + "/train"),
          subset(corpus, parts[1], corpus.id() + "/dev"),
          subset(corpus, parts[2], corpus.id() + "/test")};
}

Corpus merge_corpora(const std::vector<Corpus>& corpora) {
  std::vector<Document> docs;
  std::string merged_id;
  std::unordered_set<std::string> seen;
  for (const Corpus& c : corpora) {
    if (!merged_id.empty()) merged_id += "+";
    merged_id += c.id();
    const std::string prefix = c.id() + ":";
    for (Document d : c.documents()) {
      d.doc_id = prefix + d.doc_id;
      if (!seen.insert(d.doc_id).second) {
        throw ValidationError("document id collision after namespacing: '" + d.doc_id + "'");
      }
      d.topic = prefix + d.topic;
      d.subtopic = prefix + d.subtopic;
      for (Mention& m : d.mentions) {
        if (m.cluster_id) m.cluster_id = prefix + *m.cluster_id;
      }
      docs.push_back(std::move(d));
    }
  }
  return Corpus(merged_id, std::move(docs));
}

Corpus drop_superimposed(const Corpus& corpus) {
  if (corpus.superimposed().empty()) return corpus;
  std::vector<Document> docs = corpus.documents();
  std::map<std::uint32_t, std::set<std::string>> dropped;
  for (MentionRef r : corpus.superimposed()) {
    dropped[r.doc].insert(corpus.mention(r).mention_id);
  }
  for (auto& [doc, ids] : dropped) {
    auto& ms = docs[doc].mentions;
    ms.erase(std::remove_if(ms.begin(), ms.end(),
                            [&](const Mention& m) {
                              return ids.count(m.mention_id) ||
                                     (m.anchor && ids.count(*m.anchor));
                            }),
             ms.end());
  }
  return Corpus(corpus.id(), std::move(docs));
}

}  // namespace cdcr
