#include "cdcr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "cdcr/random.hpp"
#include "json.hpp"

namespace cdcr {

void SamplerConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("sampler: c must be > 0");
  if (k < 1) throw InvalidArgument("sampler: k must be >= 1");
}

double size_cdf(std::span<const std::uint64_t> cluster_sizes, std::uint64_t i) {
  if (cluster_sizes.empty()) throw InvalidArgument("cdf: empty cluster size multiset");
  std::uint64_t below = 0, total = 0;
  for (std::uint64_t m : cluster_sizes) {
    total += m;
    if (m <= i) below += m;
  }
  if (total == 0) throw InvalidArgument("cdf: cluster sizes must be positive");
  return static_cast<double>(below) / static_cast<double>(total);
}

double undersample(std::uint64_t m, double c, double cdf_value) {
  return c + std::pow(static_cast<double>(m), 1.0 - cdf_value) - 1.0;
}

std::uint64_t pairs_coref_count(std::uint64_t m, double c, double cdf_value) {
  if (m < 2) return 0;
  const double per_mention = std::min(undersample(m, c, cdf_value), m / 2.0);
  const double n = std::ceil(static_cast<double>(m - 1) * per_mention);
  const std::uint64_t all = m * (m - 1) / 2;
  // (m-1)*m/2 is exact in double for any realistic m; the clamp only guards
  // against rounding noise on the ceiling.
  return std::min<std::uint64_t>(all, static_cast<std::uint64_t>(std::max(0.0, n)));
}

namespace {

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

MentionPair make_pair(const Corpus& corpus, const std::vector<MentionRef>& actions,
                      IndexPair p, bool coreferring) {
  const MentionRef a = actions[p.first];
  const MentionRef b = actions[p.second];
  return {corpus.key(a), corpus.key(b), link_type(corpus, a, b), coreferring};
}

}  // namespace

PairSet sample_pairs(const Corpus& corpus, const SamplerConfig& config) {
  config.validate();
  const auto& actions = corpus.actions();
  std::vector<std::string> label(actions.size());
  std::map<std::string, std::vector<std::uint32_t>> clusters;
  for (std::uint32_t i = 0; i < actions.size(); ++i) {
    label[i] = corpus.cluster_of(actions[i]);
    clusters[label[i]].push_back(i);
  }

  PairSet out;
  out.provenance.config = config;
  out.provenance.corpus_id = corpus.id();
  if (clusters.empty()) return out;

  std::vector<std::uint64_t> sizes;
  for (auto& [_, members] : clusters) sizes.push_back(members.size());

  Rng rng(config.seed);
  for (auto& [_, members] : clusters) {
    const std::uint64_t m = members.size();
    const std::uint64_t want = pairs_coref_count(m, config.c, size_cdf(sizes, m));
    if (want == 0) continue;
    std::vector<IndexPair> candidates;
    candidates.reserve(m * (m - 1) / 2);
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        candidates.emplace_back(members[x], members[y]);
      }
    }
    sample_prefix(candidates, want, rng);
    for (IndexPair p : candidates) {
      out.pairs.push_back(make_pair(corpus, actions, p, true));
      ++out.provenance.positives[static_cast<int>(out.pairs.back().link_type)];
    }
  }

  std::array<std::vector<IndexPair>, 4> pools;
  for (std::uint32_t x = 0; x < actions.size(); ++x) {
    for (std::uint32_t y = x + 1; y < actions.size(); ++y) {
      if (label[x] == label[y]) continue;
      const auto t = static_cast<int>(link_type(corpus, actions[x], actions[y]));
      ++out.provenance.negative_pool[t];
      if (out.provenance.positives[t] > 0) pools[t].emplace_back(x, y);
    }
  }

  // The per-type cap k * positives(t) is hard. When it sits below the previous
  // type's count the nondecreasing ordering yields and provenance records it.
  std::uint64_t previous = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    const std::uint64_t cap = static_cast<std::uint64_t>(config.k) * out.provenance.positives[t];
    out.provenance.negative_targets[t] = cap;
    sample_prefix(pools[t], std::min<std::uint64_t>(cap, pools[t].size()), rng);
    for (IndexPair p : pools[t]) out.pairs.push_back(make_pair(corpus, actions, p, false));
    out.provenance.negatives[t] = pools[t].size();
    if (out.provenance.negatives[t] < previous) out.provenance.negatives_nondecreasing = false;
    previous = out.provenance.negatives[t];
  }
  return out;
}

std::vector<MentionPair> all_pairs(const Corpus& corpus) {
  const auto& actions = corpus.actions();
  std::vector<MentionPair> out;
  out.reserve(actions.size() * (actions.size() - (actions.empty() ? 0 : 1)) / 2);
  for (std::uint32_t x = 0; x < actions.size(); ++x) {
    for (std::uint32_t y = x + 1; y < actions.size(); ++y) {
      out.push_back(make_pair(corpus, actions, {x, y}, corpus.coreferent(actions[x], actions[y])));
    }
  }
  return out;
}

namespace {

nlohmann::json counts_json(const std::array<std::uint64_t, 4>& counts) {
  nlohmann::json j;
  for (LinkType t : kLinkTypes) j[std::string(to_string(t))] = counts[static_cast<int>(t)];
  return j;
}

std::array<std::uint64_t, 4> counts_from(const nlohmann::json& j) {
  std::array<std::uint64_t, 4> out{};
  for (LinkType t : kLinkTypes) {
    out[static_cast<int>(t)] = j.value(std::string(to_string(t)), std::uint64_t{0});
  }
  return out;
}

}  // namespace

void save_pairs(const PairSet& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write pair file '" + path.string() + "'");
  const auto& p = pairs.provenance;
  nlohmann::json header = {
      {"header", true},
      {"corpus_id", p.corpus_id},
      {"config", {{"c", p.config.c}, {"k", p.config.k}, {"seed", p.config.seed}}},
      {"positives", counts_json(p.positives)},
      {"negatives", counts_json(p.negatives)},
      {"negative_targets", counts_json(p.negative_targets)},
      {"negative_pool", counts_json(p.negative_pool)},
      {"negatives_nondecreasing", p.negatives_nondecreasing}};
  out << header.dump() << '\n';
  for (const MentionPair& mp : pairs.pairs) {
    nlohmann::json j = {{"a", mp.a},
                        {"b", mp.b},
                        {"link_type", std::string(to_string(mp.link_type))},
                        {"label", mp.coreferring ? 1 : 0}};
    out << j.dump() << '\n';
  }
}

PairSet load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pair file '" + path.string() + "'");
  PairSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.value("header", false)) {
      auto& p = out.provenance;
      p.corpus_id = j.value("corpus_id", "");
      const auto& cfg = j.at("config");
      p.config.c = cfg.at("c").get<double>();
      p.config.k = cfg.at("k").get<int>();
      p.config.seed = cfg.at("seed").get<std::uint64_t>();
      p.positives = counts_from(j.at("positives"));
      p.negatives = counts_from(j.at("negatives"));
      p.negative_targets = counts_from(j.value("negative_targets", nlohmann::json::object()));
      p.negative_pool = counts_from(j.value("negative_pool", nlohmann::json::object()));
      p.negatives_nondecreasing = j.value("negatives_nondecreasing", true);
      continue;
    }
    out.pairs.push_back({j.at("a").get<std::string>(), j.at("b").get<std::string>(),
                         link_type_from_string(j.at("link_type").get<std::string>()),
                         j.at("label").get<int>() != 0});
  }
  return out;
}

}  // namespace cdcr
