#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_set>

#include "cdcr/features.hpp"

namespace cdcr {

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (auto& [_, w] : a) na += w * w;
  for (auto& [_, w] : b) nb += w * w;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      dot += i->second * j->second;
      ++i;
      ++j;
    }
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

TfIdfModel TfIdfModel::fit(const Corpus& corpus) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.documents().size());
  for (const Document& d : corpus.documents()) {
    std::vector<std::string> tokens;
    for (const Sentence& s : d.sentences) tokens.insert(tokens.end(), s.begin(), s.end());
    docs.push_back(std::move(tokens));
  }
  return fit(docs);
}

TfIdfModel TfIdfModel::fit(const std::vector<std::vector<std::string>>& documents) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::unordered_set<std::string> seen;
    for (const std::string& t : doc) seen.insert(lowercase(t));
    for (const std::string& t : seen) ++df[t];
  }
  TfIdfModel model;
  model.document_count_ = documents.size();
  const double n = static_cast<double>(documents.size());
  for (auto& [term, count] : df) {
    model.vocabulary_.emplace(term, static_cast<std::uint32_t>(model.idf_.size()));
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

double TfIdfModel::idf(std::string_view term) const {
  auto it = vocabulary_.find(lowercase(term));
  return it == vocabulary_.end() ? 0.0 : idf_[it->second];
}

SparseVector TfIdfModel::transform(std::span<const std::string> tokens) const {
  std::map<std::uint32_t, double> counts;
  for (const std::string& t : tokens) {
    auto it = vocabulary_.find(lowercase(t));
    if (it != vocabulary_.end()) counts[it->second] += 1.0;
  }
  SparseVector out;
  out.reserve(counts.size());
  double norm = 0.0;
  for (auto& [id, tf] : counts) {
    const double w = tf * idf_[id];
    out.emplace_back(id, w);
    norm += w * w;
  }
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (auto& [_, w] : out) w /= norm;
  }
  return out;
}

SparseVector TfIdfModel::transform(std::span<const Sentence> sentences) const {
  std::vector<std::string> tokens;
  for (const Sentence& s : sentences) tokens.insert(tokens.end(), s.begin(), s.end());
  return transform(tokens);
}

}  // namespace cdcr
