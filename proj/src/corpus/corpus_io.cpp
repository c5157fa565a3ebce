#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cdcr/corpus.hpp"
#include "json.hpp"

namespace cdcr {

using nlohmann::json;

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc() && p == s.data() + pos + len;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp_seconds(std::string_view s) {
  int year = 0, month = 1, day = 1, hour = 0, minute = 0, second = 0;
  if (!read_int(s, 0, 4, year)) return std::nullopt;
  std::size_t pos = 4;
  if (pos < s.size()) {
    if (s[pos] != '-' || !read_int(s, pos + 1, 2, month)) return std::nullopt;
    pos += 3;
  }
  if (pos < s.size()) {
    if (s[pos] != '-' || !read_int(s, pos + 1, 2, day)) return std::nullopt;
    pos += 3;
  }
  if (pos < s.size()) {
    if (s[pos] != 'T' || !read_int(s, pos + 1, 2, hour) || pos + 3 >= s.size() ||
        s[pos + 3] != ':' || !read_int(s, pos + 4, 2, minute)) {
      return std::nullopt;
    }
    pos += 6;
    if (pos < s.size()) {
      if (s[pos] != ':' || !read_int(s, pos + 1, 2, second)) return std::nullopt;
      pos += 3;
    }
  }
  if (pos != s.size()) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_minutes(std::int64_t minutes_since_epoch) {
  using namespace std::chrono;
  std::int64_t days = minutes_since_epoch / 1440;
  std::int64_t rem = minutes_since_epoch % 1440;
  if (rem < 0) {
    rem += 1440;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

namespace {

template <class T>
std::optional<T> opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <class T>
T req(const json& j, const char* key, const std::string& at) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw ValidationError(at + ": missing required field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(at + "." + key + ": " + e.what());
  }
}

TokenSpan span_from(const json& j, const std::string& at) {
  auto arr = req<std::vector<std::int64_t>>(j, "token_span", at);
  if (arr.size() != 2 || arr[0] < 0 || arr[1] < 0) {
    throw ValidationError(at + ".token_span: expected two nonnegative integers");
  }
  return {static_cast<std::uint32_t>(arr[0]), static_cast<std::uint32_t>(arr[1])};
}

std::uint32_t sentence_from(const json& j, const std::string& at) {
  auto v = req<std::int64_t>(j, "sentence", at);
  if (v < 0) throw ValidationError(at + ".sentence: negative index");
  return static_cast<std::uint32_t>(v);
}

json span_json(const TokenSpan& s) { return json::array({s.start, s.end}); }

template <class T>
json or_null(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

Document document_from_json(const json& j, std::size_t index) {
  const std::string at = "documents[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ValidationError(at + ": expected an object");
  Document d;
  d.doc_id = req<std::string>(j, "doc_id", at);
  d.topic = req<std::string>(j, "topic", at);
  d.subtopic = req<std::string>(j, "subtopic", at);
  if (auto pd = opt<std::string>(j, "publish_date")) {
    auto secs = parse_timestamp_seconds(*pd);
    if (!secs) throw ValidationError(at + ".publish_date: unparseable '" + *pd + "'");
    d.publish_date = PublishDate{*secs / 60};
  }
  d.sentences = req<std::vector<Sentence>>(j, "sentences", at);

  if (auto it = j.find("mentions"); it != j.end() && !it->is_null()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& mj = (*it)[i];
      const std::string mat = at + ".mentions[" + std::to_string(i) + "]";
      Mention m;
      m.mention_id = req<std::string>(mj, "mention_id", mat);
      m.kind = mention_kind_from_string(req<std::string>(mj, "kind", mat));
      m.sentence = sentence_from(mj, mat);
      m.token_span = span_from(mj, mat);
      m.cluster_id = opt<std::string>(mj, "cluster_id");
      m.anchor = opt<std::string>(mj, "anchor");
      m.subtype = opt<std::string>(mj, "subtype");
      m.lemma = opt<std::string>(mj, "lemma");
      d.mentions.push_back(std::move(m));
    }
  }
  if (auto it = j.find("timex"); it != j.end() && !it->is_null()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& tj = (*it)[i];
      const std::string tat = at + ".timex[" + std::to_string(i) + "]";
      d.timex.push_back({sentence_from(tj, tat), span_from(tj, tat),
                         req<std::string>(tj, "value", tat)});
    }
  }
  if (auto it = j.find("entity_links"); it != j.end() && !it->is_null()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& ej = (*it)[i];
      const std::string eat = at + ".entity_links[" + std::to_string(i) + "]";
      EntityLink e;
      e.sentence = sentence_from(ej, eat);
      e.token_span = span_from(ej, eat);
      e.kb_id = req<std::string>(ej, "kb_id", eat);
      e.lat = opt<double>(ej, "lat");
      e.lon = opt<double>(ej, "lon");
      e.hierarchy = opt<std::vector<std::string>>(ej, "hierarchy").value_or(std::vector<std::string>{});
      d.entity_links.push_back(std::move(e));
    }
  }
  if (auto it = j.find("srl"); it != j.end() && !it->is_null()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& fj = (*it)[i];
      const std::string fat = at + ".srl[" + std::to_string(i) + "]";
      SrlFrame f;
      auto pit = fj.find("predicate");
      if (pit == fj.end()) throw ValidationError(fat + ": missing predicate");
      f.predicate = {sentence_from(*pit, fat + ".predicate"), span_from(*pit, fat + ".predicate")};
      if (auto ait = fj.find("args"); ait != fj.end() && !ait->is_null()) {
        for (std::size_t a = 0; a < ait->size(); ++a) {
          const json& aj = (*ait)[a];
          const std::string aat = fat + ".args[" + std::to_string(a) + "]";
          f.args.push_back({srl_role_from_string(req<std::string>(aj, "role", aat)),
                            {sentence_from(aj, aat), span_from(aj, aat)}});
        }
      }
      d.srl.push_back(std::move(f));
    }
  }
  return d;
}

json document_to_json(const Document& d) {
  json j;
  j["doc_id"] = d.doc_id;
  j["topic"] = d.topic;
  j["subtopic"] = d.subtopic;
  j["publish_date"] = d.publish_date ? json(format_minutes(d.publish_date->minutes_since_epoch))
                                     : json(nullptr);
  j["sentences"] = d.sentences;
  json mentions = json::array();
  for (const Mention& m : d.mentions) {
    mentions.push_back({{"mention_id", m.mention_id},
                        {"kind", std::string(to_string(m.kind))},
                        {"sentence", m.sentence},
                        {"token_span", span_json(m.token_span)},
                        {"cluster_id", or_null(m.cluster_id)},
                        {"anchor", or_null(m.anchor)},
                        {"subtype", or_null(m.subtype)},
                        {"lemma", or_null(m.lemma)}});
  }
  j["mentions"] = std::move(mentions);
  json timex = json::array();
  for (const TimexSpan& t : d.timex) {
    timex.push_back({{"sentence", t.sentence}, {"token_span", span_json(t.token_span)},
                     {"value", t.value}});
  }
  j["timex"] = std::move(timex);
  json links = json::array();
  for (const EntityLink& e : d.entity_links) {
    links.push_back({{"sentence", e.sentence},
                     {"token_span", span_json(e.token_span)},
                     {"kb_id", e.kb_id},
                     {"lat", or_null(e.lat)},
                     {"lon", or_null(e.lon)},
                     {"hierarchy", e.hierarchy}});
  }
  j["entity_links"] = std::move(links);
  json srl = json::array();
  for (const SrlFrame& f : d.srl) {
    json args = json::array();
    for (const SrlArgument& a : f.args) {
      args.push_back({{"role", std::string(to_string(a.role))},
                      {"sentence", a.span.sentence},
                      {"token_span", span_json(a.span.tokens)}});
    }
    srl.push_back({{"predicate",
                    {{"sentence", f.predicate.sentence},
                     {"token_span", span_json(f.predicate.tokens)}}},
                   {"args", std::move(args)}});
  }
  j["srl"] = std::move(srl);
  return j;
}

}  // namespace

Corpus parse_corpus(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed corpus JSON: ") + e.what());
  }
  if (!root.is_object()) throw ValidationError("corpus: top level must be an object");
  const std::string id = req<std::string>(root, "corpus_id", "corpus");
  auto it = root.find("documents");
  if (it == root.end() || !it->is_array()) {
    throw ValidationError("corpus: missing 'documents' array");
  }
  std::vector<Document> docs;
  docs.reserve(it->size());
  for (std::size_t i = 0; i < it->size(); ++i) docs.push_back(document_from_json((*it)[i], i));
  return Corpus(id, std::move(docs));
}

std::string serialize_corpus(const Corpus& corpus) {
  json docs = json::array();
  for (const Document& d : corpus.documents()) docs.push_back(document_to_json(d));
  json root = {{"corpus_id", corpus.id()}, {"documents", std::move(docs)}};
  return root.dump(1);
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file '" + path.string() + "'");
  out << serialize_corpus(corpus) << '\n';
}

SplitSpec SplitSpec::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed split spec: ") + e.what());
  }
  SplitSpec spec;
  const std::string mode = req<std::string>(j, "mode", "split spec");
  const char* parts[] = {"train", "dev", "test"};
  if (mode == "explicit" || mode == "by_topic") {
    spec.mode = mode == "explicit" ? Mode::explicit_lists : Mode::by_topic;
    for (int i = 0; i < 3; ++i) {
      spec.members[i] = opt<std::vector<std::string>>(j, parts[i]).value_or(std::vector<std::string>{});
    }
    if (auto field = opt<std::string>(j, "field")) {
      if (*field != "topic" && *field != "subtopic") {
        throw ValidationError("split spec: field must be 'topic' or 'subtopic'");
      }
      spec.group_by_subtopic = *field == "subtopic";
    }
  } else if (mode == "percent") {
    spec.mode = Mode::percent;
    for (int i = 0; i < 3; ++i) spec.percent[i] = req<double>(j, parts[i], "split spec");
    spec.seed = opt<std::uint64_t>(j, "seed").value_or(0);
  } else {
    throw ValidationError("split spec: unknown mode '" + mode + "'");
  }
  return spec;
}

}  // namespace cdcr
