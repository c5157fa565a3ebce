#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdcr/errors.hpp"

namespace cdcr {

/// Half-open token range [start, end) inside one sentence.
struct TokenSpan {
  std::uint32_t start = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const { return end - start; }
  bool overlaps(const TokenSpan& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// A span anchored to a sentence of its document.
struct SentenceSpan {
  std::uint32_t sentence = 0;
  TokenSpan tokens;

  bool overlaps(const SentenceSpan& other) const {
    return sentence == other.sentence && tokens.overlaps(other.tokens);
  }
  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

enum class MentionKind { action, participant, time, location };

std::string_view to_string(MentionKind kind);
MentionKind mention_kind_from_string(std::string_view name);

struct Mention {
  std::string mention_id;
  MentionKind kind = MentionKind::action;
  std::uint32_t sentence = 0;
  TokenSpan token_span;
  std::optional<std::string> cluster_id;
  std::optional<std::string> anchor;
  std::optional<std::string> subtype;
  std::optional<std::string> lemma;

  SentenceSpan location() const { return {sentence, token_span}; }
  bool is_action() const { return kind == MentionKind::action; }
  friend bool operator==(const Mention&, const Mention&) = default;
};

struct TimexSpan {
  std::uint32_t sentence = 0;
  TokenSpan token_span;
  std::string value;

  SentenceSpan location() const { return {sentence, token_span}; }
  friend bool operator==(const TimexSpan&, const TimexSpan&) = default;
};

struct EntityLink {
  std::uint32_t sentence = 0;
  TokenSpan token_span;
  std::string kb_id;
  std::optional<double> lat;
  std::optional<double> lon;
  /// kb ids from specific to general (subdivision, country, ...)
  std::vector<std::string> hierarchy;

  SentenceSpan location() const { return {sentence, token_span}; }
  bool has_coordinates() const { return lat.has_value() && lon.has_value(); }
  /// Entity links carrying coordinates or a containment chain are places.
  bool is_location() const { return has_coordinates() || !hierarchy.empty(); }
  friend bool operator==(const EntityLink&, const EntityLink&) = default;
};

enum class SrlRole { participant, time, location };

std::string_view to_string(SrlRole role);
SrlRole srl_role_from_string(std::string_view name);

struct SrlArgument {
  SrlRole role = SrlRole::participant;
  SentenceSpan span;
  friend bool operator==(const SrlArgument&, const SrlArgument&) = default;
};

struct SrlFrame {
  SentenceSpan predicate;
  std::vector<SrlArgument> args;
  friend bool operator==(const SrlFrame&, const SrlFrame&) = default;
};

/// Minute-precision calendar timestamp, stored as minutes since the epoch.
struct PublishDate {
  std::int64_t minutes_since_epoch = 0;
  friend bool operator==(const PublishDate&, const PublishDate&) = default;
};

using Sentence = std::vector<std::string>;

struct Document {
  std::string doc_id;
  std::string topic;
  std::string subtopic;
  std::optional<PublishDate> publish_date;
  std::vector<Sentence> sentences;
  std::vector<Mention> mentions;
  std::vector<TimexSpan> timex;
  std::vector<EntityLink> entity_links;
  std::vector<SrlFrame> srl;

  const Mention* find_mention(std::string_view mention_id) const;
  /// Tokens of a span joined by single spaces.
  std::string surface(const SentenceSpan& span) const;
  friend bool operator==(const Document&, const Document&) = default;
};

/// Position of an action mention inside a corpus.
struct MentionRef {
  std::uint32_t doc = 0;
  std::uint32_t mention = 0;
  friend auto operator<=>(const MentionRef&, const MentionRef&) = default;
};

enum class LinkType : std::uint8_t {
  within_document = 0,
  within_subtopic = 1,
  cross_subtopic = 2,
  cross_topic = 3,
};

inline constexpr std::array<LinkType, 4> kLinkTypes = {
    LinkType::within_document, LinkType::within_subtopic,
    LinkType::cross_subtopic, LinkType::cross_topic};

std::string_view to_string(LinkType type);
LinkType link_type_from_string(std::string_view name);

/// Immutable after construction. Construction validates every invariant and
/// builds the action-mention index used by all downstream modules.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string corpus_id, std::vector<Document> documents);

  const std::string& id() const { return corpus_id_; }
  const std::vector<Document>& documents() const { return documents_; }
  const Document& document(std::size_t index) const { return documents_.at(index); }
  std::optional<std::size_t> document_index(std::string_view doc_id) const;

  /// Action mentions in canonical order: document, sentence, token start.
  const std::vector<MentionRef>& actions() const { return actions_; }
  const Mention& mention(MentionRef ref) const;
  const Document& document_of(MentionRef ref) const { return documents_.at(ref.doc); }
  /// "<doc_id>/<mention_id>"
  std::string key(MentionRef ref) const;
  std::optional<MentionRef> find(std::string_view key) const;
  MentionRef at(std::string_view key) const;

  /// Gold cluster label; actions without a cluster_id are their own singleton.
  std::string cluster_of(MentionRef ref) const;
  bool coreferent(MentionRef a, MentionRef b) const;

  /// Action mentions sharing their exact span with another action mention.
  const std::vector<MentionRef>& superimposed() const { return superimposed_; }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.corpus_id_ == b.corpus_id_ && a.documents_ == b.documents_;
  }

 private:
  void validate() const;
  void build_index();

  std::string corpus_id_;
  std::vector<Document> documents_;
  std::vector<MentionRef> actions_;
  std::vector<MentionRef> superimposed_;
  std::unordered_map<std::string, MentionRef> by_key_;
  std::unordered_map<std::string, std::size_t> by_doc_id_;
};

LinkType link_type(const Corpus& corpus, MentionRef a, MentionRef b);
LinkType link_type(const Corpus& corpus, std::string_view key_a, std::string_view key_b);

struct StatsReport {
  std::size_t topics = 0;
  std::size_t subtopics = 0;
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t event_mentions = 0;
  std::size_t clusters = 0;
  std::size_t singletons = 0;
  std::array<std::uint64_t, 4> coreferring_links{};
  std::array<std::uint64_t, 4> non_coreferring_pairs{};

  std::uint64_t total_links() const;
};

StatsReport corpus_stats(const Corpus& corpus);

struct SplitSpec {
  enum class Mode { explicit_lists, by_topic, percent };
  Mode mode = Mode::explicit_lists;
  /// explicit_lists: document ids; by_topic: topic labels.
  std::array<std::vector<std::string>, 3> members;
  /// by_topic mode matches on the subtopic label instead of the topic.
  bool group_by_subtopic = false;
  /// percent mode: train/dev/test shares of all documents, assigned by
  /// whole subtopics in shuffled order.
  std::array<double, 3> percent{70.0, 15.0, 15.0};
  std::uint64_t seed = 0;

  static SplitSpec from_json_text(std::string_view text);
};

struct CorpusSplits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

CorpusSplits split_corpus(const Corpus& corpus, const SplitSpec& spec);

/// Documents of `corpus` at the given indices, in the given order.
Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& doc_indices,
              const std::string& corpus_id);

/// Joint corpus. Document ids, topics, subtopics and cluster ids are prefixed
/// with "<corpus_id>:" so nothing from two inputs can corefer.
Corpus merge_corpora(const std::vector<Corpus>& corpora);

/// Drops action mentions whose span is shared with another action mention
/// (and components anchored to them).
Corpus drop_superimposed(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view json_text);
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// "YYYY-MM-DDTHH:MM" / "YYYY-MM-DD" / "YYYY-MM-DDTHH:MM:SS" to seconds since
/// the epoch. Date-only values resolve to midnight.
std::optional<std::int64_t> parse_timestamp_seconds(std::string_view text);
std::string format_minutes(std::int64_t minutes_since_epoch);

}  // namespace cdcr
