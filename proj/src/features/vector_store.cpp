#include <cmath>
#include <fstream>
#include <sstream>

#include "cdcr/features.hpp"
#include "json.hpp"

namespace cdcr {

void VectorStore::insert(std::string key, std::vector<float> vector) {
  if (vector.empty()) throw ValidationError("vector store: empty vector for key '" + key + "'");
  if (dimension_ == 0) {
    dimension_ = vector.size();
  } else if (vector.size() != dimension_) {
    throw SchemaError("vector store: key '" + key + "' has dimension " +
                      std::to_string(vector.size()) + ", expected " +
                      std::to_string(dimension_));
  }
  vectors_[std::move(key)] = std::move(vector);
}

std::optional<std::span<const float>> VectorStore::get(std::string_view key) const {
  auto it = vectors_.find(std::string(key));
  if (it == vectors_.end()) return std::nullopt;
  return std::span<const float>(it->second);
}

VectorStore VectorStore::parse(std::string_view jsonl) {
  VectorStore store;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      store.insert(j.at("key").get<std::string>(), j.at("vector").get<std::vector<float>>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("embedding sidecar line " + std::to_string(line_no) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("embedding sidecar line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding sidecar '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

VectorStore VectorStore::namespaced(const std::string& prefix) const {
  VectorStore out;
  for (const auto& [key, v] : vectors_) {
    out.insert(key.rfind("kb/", 0) == 0 ? key : prefix + key, v);
  }
  return out;
}

VectorStore VectorStore::without(const std::unordered_set<std::string>& keys) const {
  VectorStore out;
  out.dimension_ = dimension_;
  for (const auto& [key, v] : vectors_) {
    if (!keys.count(key)) out.vectors_.emplace(key, v);
  }
  return out;
}

VectorStore VectorStore::merge(const std::vector<VectorStore>& stores) {
  VectorStore out;
  for (const VectorStore& s : stores) {
    for (const auto& [key, v] : s.vectors_) out.insert(key, v);
  }
  return out;
}

std::string VectorStore::mention_key(std::string_view doc_id, std::string_view mention_id) {
  return std::string(doc_id) + "/" + std::string(mention_id);
}

std::string VectorStore::sentence_key(std::string_view doc_id, std::size_t sentence) {
  return std::string(doc_id) + "/sent/" + std::to_string(sentence);
}

std::string VectorStore::kb_key(std::string_view kb_id) { return "kb/" + std::string(kb_id); }

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace cdcr
