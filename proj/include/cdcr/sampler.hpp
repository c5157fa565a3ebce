#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdcr/corpus.hpp"

namespace cdcr {

struct SamplerConfig {
  /// Pair multiplier for the largest cluster.
  double c = 8.0;
  /// Negatives per positive, per link type.
  int k = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MentionPair {
  std::string a;  // "<doc_id>/<mention_id>"
  std::string b;
  LinkType link_type = LinkType::within_document;
  bool coreferring = false;
  friend bool operator==(const MentionPair&, const MentionPair&) = default;
};

struct PairSetProvenance {
  SamplerConfig config;
  std::string corpus_id;
  std::array<std::uint64_t, 4> positives{};
  std::array<std::uint64_t, 4> negatives{};
  /// k * positives(t), the per-type negative cap.
  std::array<std::uint64_t, 4> negative_targets{};
  /// Non-coreferring candidates available per type.
  std::array<std::uint64_t, 4> negative_pool{};
  /// False when the nondecreasing-negatives ordering could not be met.
  bool negatives_nondecreasing = true;
};

struct PairSet {
  std::vector<MentionPair> pairs;
  PairSetProvenance provenance;
};

/// Fraction of all mentions that belong to clusters of size <= i.
double size_cdf(std::span<const std::uint64_t> cluster_sizes, std::uint64_t i);

/// c + m^(1 - cdf) - 1
double undersample(std::uint64_t m, double c, double cdf_value);

/// ceil((m - 1) * min(undersample, m / 2)); 0 for m < 2.
std::uint64_t pairs_coref_count(std::uint64_t m, double c, double cdf_value);

PairSet sample_pairs(const Corpus& corpus, const SamplerConfig& config);

/// Every unordered action pair of the corpus, labeled, in canonical order.
std::vector<MentionPair> all_pairs(const Corpus& corpus);

void save_pairs(const PairSet& pairs, const std::filesystem::path& path);
PairSet load_pairs(const std::filesystem::path& path);

}  // namespace cdcr
