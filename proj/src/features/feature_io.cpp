#include <cstring>
#include <fstream>
#include <unordered_map>

#include "cdcr/features.hpp"
#include "json.hpp"

namespace cdcr {

FeatureMatrix featurize(const FeatureExtractor& extractor, const std::vector<MentionPair>& pairs) {
  FeatureMatrix m;
  m.names = extractor.names();
  m.pairs = pairs;
  m.rows.reserve(pairs.size());
  for (const MentionPair& p : pairs) m.rows.push_back(extractor.extract(p.a, p.b));
  return m;
}

FeatureMatrix FeatureMatrix::project(const std::vector<std::string>& schema) const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
  std::vector<std::size_t> columns;
  columns.reserve(schema.size());
  for (const std::string& name : schema) {
    auto it = index.find(name);
    if (it == index.end()) throw SchemaError("feature '" + name + "' is not in the matrix");
    columns.push_back(it->second);
  }
  FeatureMatrix out;
  out.names = schema;
  out.pairs = pairs;
  out.rows.reserve(rows.size());
  for (const FeatureVector& row : rows) {
    FeatureVector r;
    r.values.reserve(columns.size());
    r.present.reserve(columns.size());
    for (std::size_t c : columns) {
      r.values.push_back(row.values[c]);
      r.present.push_back(row.present[c]);
    }
    out.rows.push_back(std::move(r));
  }
  return out;
}

void save_features_jsonl(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file '" + path.string() + "'");
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    nlohmann::ordered_json features = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < matrix.names.size(); ++c) {
      features[matrix.names[c]] = matrix.rows[r].present[c]
                                      ? nlohmann::ordered_json(matrix.rows[r].values[c])
                                      : nlohmann::ordered_json(nullptr);
    }
    nlohmann::ordered_json line = nlohmann::ordered_json::object();
    if (r < matrix.pairs.size()) {
      line["a"] = matrix.pairs[r].a;
      line["b"] = matrix.pairs[r].b;
      line["link_type"] = std::string(to_string(matrix.pairs[r].link_type));
      line["label"] = matrix.pairs[r].coreferring ? 1 : 0;
    }
    line["features"] = std::move(features);
    out << line.dump() << '\n';
  }
}

FeatureMatrix load_features_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file '" + path.string() + "'");
  FeatureMatrix m;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const auto& features = j.at("features");
    if (m.names.empty()) {
      for (auto it = features.begin(); it != features.end(); ++it) m.names.push_back(it.key());
    }
    FeatureVector row;
    for (const std::string& name : m.names) {
      auto it = features.find(name);
      if (it == features.end()) {
        throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                          ": missing feature '" + name + "'");
      }
      row.values.push_back(it->is_null() ? 0.0 : it->get<double>());
      row.present.push_back(it->is_null() ? 0 : 1);
    }
    if (features.size() != m.names.size()) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": feature set differs");
    }
    m.rows.push_back(std::move(row));
    m.pairs.push_back({j.value("a", ""), j.value("b", ""),
                       link_type_from_string(j.value("link_type", "within-document")),
                       j.value("label", 0) != 0});
  }
  return m;
}

namespace {

constexpr char kMagic[8] = {'C', 'D', 'C', 'R', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kBinaryVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("feature binary: truncated file");
  return v;
}

}  // namespace

void save_features_binary(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.names.size()));
  for (const std::string& name : matrix.names) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  put<std::uint64_t>(out, matrix.rows.size());
  const std::size_t n = matrix.names.size();
  std::vector<std::uint8_t> bitmap((n + 7) / 8);
  for (const FeatureVector& row : matrix.rows) {
    std::fill(bitmap.begin(), bitmap.end(), 0);
    for (std::size_t c = 0; c < n; ++c) {
      put<float>(out, static_cast<float>(row.values[c]));
      if (row.present[c]) bitmap[c / 8] |= static_cast<std::uint8_t>(1u << (c % 8));
    }
    out.write(reinterpret_cast<const char*>(bitmap.data()), static_cast<std::streamsize>(bitmap.size()));
  }
}

FeatureMatrix load_features_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ParseError("feature binary: bad magic in '" + path.string() + "'");
  }
  if (get<std::uint32_t>(in) != kBinaryVersion) throw ParseError("feature binary: unsupported version");
  FeatureMatrix m;
  const auto n = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name(get<std::uint32_t>(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    m.names.push_back(std::move(name));
  }
  const auto rows = get<std::uint64_t>(in);
  std::vector<std::uint8_t> bitmap((n + 7) / 8);
  for (std::uint64_t r = 0; r < rows; ++r) {
    FeatureVector row;
    row.values.resize(n);
    row.present.resize(n);
    for (std::uint32_t c = 0; c < n; ++c) row.values[c] = get<float>(in);
    in.read(reinterpret_cast<char*>(bitmap.data()), static_cast<std::streamsize>(bitmap.size()));
    if (!in) throw ParseError("feature binary: truncated row");
    for (std::uint32_t c = 0; c < n; ++c) row.present[c] = (bitmap[c / 8] >> (c % 8)) & 1u;
    m.rows.push_back(std::move(row));
  }
  return m;
}

}  // namespace cdcr
