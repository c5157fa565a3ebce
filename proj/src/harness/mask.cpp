#include <algorithm>
#include <unordered_set>

#include "cdcr/harness.hpp"
#include "cdcr/random.hpp"

namespace cdcr {

namespace {

const std::set<std::string> kMaskable = {"action", "participants", "time", "location",
                                         "publish_date"};

bool overlaps_any(const SentenceSpan& span, const std::vector<SentenceSpan>& masked) {
  return std::any_of(masked.begin(), masked.end(),
                     [&](const SentenceSpan& m) { return m.overlaps(span); });
}

class TokenSource {
 public:
  TokenSource(const Corpus& corpus, std::uint64_t seed) : rng_(seed) {
    for (const Document& d : corpus.documents()) {
      for (const Sentence& s : d.sentences) {
        for (const std::string& t : s) used_.insert(lowercase(t));
      }
      for (const Mention& m : d.mentions) {
        if (m.lemma) used_.insert(lowercase(*m.lemma));
      }
    }
  }

  /// Five ASCII letters never seen before, compared case-insensitively.
  std::string next() {
    static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    while (true) {
      std::string token(5, ' ');
      for (char& c : token) c = kLetters[uniform_index(rng_, 52)];
      if (used_.insert(lowercase(token)).second) return token;
    }
  }

 private:
  Rng rng_;
  std::unordered_set<std::string> used_;
};

}  // namespace

void MaskSpec::validate() const {
  if (components.empty()) throw InvalidArgument("mask spec names no components");
  for (const std::string& c : components) {
    if (!kMaskable.count(c)) throw InvalidArgument("cannot mask unknown component '" + c + "'");
  }
}

MaskSpec MaskSpec::from_json(const nlohmann::json& j) {
  MaskSpec spec;
  try {
    for (const auto& c : j.at("components")) spec.components.insert(c.get<std::string>());
    spec.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("mask spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json MaskSpec::to_json() const {
  return {{"components", std::vector<std::string>(components.begin(), components.end())},
          {"seed", seed}};
}

MaskResult mask_corpus(const Corpus& corpus, const MaskSpec& spec) {
  spec.validate();
  const bool action = spec.components.count("action");
  const bool participants = spec.components.count("participants");
  const bool time = spec.components.count("time");
  const bool location = spec.components.count("location");
  TokenSource tokens(corpus, spec.seed);
  MaskResult result;
  std::vector<Document> docs = corpus.documents();

  for (Document& doc : docs) {
    std::vector<SentenceSpan> masked;
    for (const Mention& m : doc.mentions) {
      const bool pick = (m.kind == MentionKind::action && action) ||
                        (m.kind == MentionKind::participant && participants) ||
                        (m.kind == MentionKind::time && time) ||
                        (m.kind == MentionKind::location && location);
      if (pick) masked.push_back(m.location());
    }
    if (time) {
      for (const TimexSpan& t : doc.timex) masked.push_back(t.location());
    }
    for (const EntityLink& e : doc.entity_links) {
      if ((location && e.is_location()) || (participants && !e.is_location())) {
        masked.push_back(e.location());
      }
    }

    // Replace each covered token position once, in reading order.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> positions;
    for (const SentenceSpan& s : masked) {
      for (std::uint32_t t = s.tokens.start; t < s.tokens.end; ++t) positions.emplace_back(s.sentence, t);
    }
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    for (auto [s, t] : positions) doc.sentences[s][t] = tokens.next();

    for (Mention& m : doc.mentions) {
      if (m.kind == MentionKind::action && action) {
        m.lemma = doc.sentences[m.sentence][m.token_span.start];
        result.masked_actions.push_back(VectorStore::mention_key(doc.doc_id, m.mention_id));
      }
    }
    std::erase_if(doc.timex, [&](const TimexSpan& t) { return overlaps_any(t.location(), masked); });
    std::erase_if(doc.entity_links,
                  [&](const EntityLink& e) { return overlaps_any(e.location(), masked); });
    for (SrlFrame& f : doc.srl) {
      std::erase_if(f.args, [&](const SrlArgument& a) { return overlaps_any(a.span, masked); });
    }
    if (spec.components.count("publish_date")) doc.publish_date.reset();
  }
  result.corpus = Corpus(corpus.id(), std::move(docs));
  return result;
}

}  // namespace cdcr
