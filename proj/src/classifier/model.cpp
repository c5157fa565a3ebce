#include <cmath>
#include <fstream>
#include <sstream>
#include <algorithm>

#include "cdcr/classifier.hpp"
#include "json.hpp"

namespace cdcr {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "cdcr-pair-model";
constexpr int kModelVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

TrainingData TrainingData::from(const FeatureMatrix& matrix) {
  TrainingData d;
  d.names = matrix.names;
  d.rows = matrix.rows;
  d.labels.reserve(matrix.pairs.size());
  for (const MentionPair& p : matrix.pairs) d.labels.push_back(p.coreferring ? 1 : 0);
  if (d.labels.size() != d.rows.size()) throw SchemaError("feature matrix lacks pair labels");
  return d;
}

std::size_t TrainingData::positives() const {
  std::size_t n = 0;
  for (auto y : labels) n += y ? 1 : 0;
  return n;
}

TrainingData TrainingData::select_rows(std::span<const std::size_t> indices) const {
  TrainingData d;
  d.names = names;
  d.rows.reserve(indices.size());
  d.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    d.rows.push_back(rows.at(i));
    d.labels.push_back(labels.at(i));
  }
  return d;
}

TrainingData TrainingData::select_columns(const std::vector<std::string>& schema) const {
  FeatureMatrix m;
  m.names = names;
  m.rows = rows;
  FeatureMatrix projected = m.project(schema);
  TrainingData d;
  d.names = schema;
  d.rows = std::move(projected.rows);
  d.labels = labels;
  return d;
}

std::string_view to_string(LearnerKind kind) {
  return kind == LearnerKind::linear_logistic ? "linear-logistic" : "gradient-boosted-trees";
}

LearnerKind learner_kind_from_string(std::string_view name) {
  if (name == "linear-logistic" || name == "logreg") return LearnerKind::linear_logistic;
  if (name == "gradient-boosted-trees" || name == "gbt") return LearnerKind::gradient_boosted_trees;
  throw InvalidArgument("unknown learner '" + std::string(name) + "'");
}

PairModel::PairModel(LearnerKind kind, std::vector<std::string> schema, std::uint64_t seed,
                     std::variant<LinearModel, TreeEnsemble> params, LearnerConfig config)
    : kind_(kind), schema_(std::move(schema)), seed_(seed), params_(std::move(params)),
      config_(config) {}

double PairModel::decision(const FeatureVector& row) const {
  if (row.size() != schema_.size() || row.present.size() != schema_.size()) {
    throw SchemaError("feature vector has " + std::to_string(row.size()) +
                      " values, model schema has " + std::to_string(schema_.size()));
  }
  if (kind_ == LearnerKind::linear_logistic) {
    const LinearModel& m = linear();
    double z = m.weights.back();
    for (std::size_t j = 0; j < schema_.size(); ++j) {
      if (!row.present[j]) continue;
      z += m.weights[2 * j] * (row.values[j] - m.means[j]) / m.scales[j] + m.weights[2 * j + 1];
    }
    return z;
  }
  const TreeEnsemble& e = ensemble();
  double z = e.base_score;
  for (const Tree& t : e.trees) z += t.predict(row);
  return z;
}

double PairModel::predict_proba(const FeatureVector& row) const {
  // Clamp keeps the output strictly inside (0, 1) under saturation.
  return std::clamp(sigmoid(decision(row)), 1e-15, 1.0 - 1e-15);
}

std::vector<double> PairModel::predict_proba(const FeatureMatrix& matrix) const {
  FeatureMatrix projected;
  const FeatureMatrix* source = &matrix;
  if (matrix.names != schema_) {
    projected = matrix.project(schema_);
    source = &projected;
  }
  std::vector<double> out;
  out.reserve(source->rows.size());
  for (const FeatureVector& row : source->rows) out.push_back(predict_proba(row));
  return out;
}

double log_loss(const PairModel& model, const TrainingData& data) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p = model.predict_proba(data.rows[i]);
    total -= data.labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return data.size() ? total / static_cast<double>(data.size()) : 0.0;
}

PairModel train(const TrainingData& data, const LearnerConfig& config, std::uint64_t seed) {
  return config.kind == LearnerKind::linear_logistic ? train_logreg(data, config.logistic, seed)
                                                     : train_gbt(data, config.gbt, seed);
}

std::string PairModel::to_json() const {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["learner"] = std::string(to_string(kind_));
  j["schema"] = schema_;
  j["seed"] = seed_;
  if (kind_ == LearnerKind::linear_logistic) {
    const auto& p = config_.logistic;
    j["hyperparameters"] = {{"l2", p.l2}, {"learning_rate", p.learning_rate}, {"epochs", p.epochs}};
    const LinearModel& m = linear();
    j["parameters"] = {{"means", m.means}, {"scales", m.scales}, {"weights", m.weights}};
  } else {
    const auto& p = config_.gbt;
    j["hyperparameters"] = {{"trees", p.trees},
                            {"max_depth", p.max_depth},
                            {"learning_rate", p.learning_rate},
                            {"min_child_weight", p.min_child_weight},
                            {"lambda", p.lambda},
                            {"gamma", p.gamma},
                            {"subsample", p.subsample},
                            {"colsample", p.colsample}};
    const TreeEnsemble& e = ensemble();
    json trees = json::array();
    for (const Tree& t : e.trees) {
      json nodes = json::array();
      for (const TreeNode& n : t.nodes) {
        if (n.leaf) {
          nodes.push_back({{"leaf", n.value}, {"cover", n.cover}});
        } else {
          nodes.push_back({{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"default_left", n.default_left},
                           {"left", n.left},
                           {"right", n.right},
                           {"gain", n.gain},
                           {"cover", n.cover}});
        }
      }
      trees.push_back(std::move(nodes));
    }
    j["parameters"] = {{"base_score", e.base_score}, {"trees", std::move(trees)}};
  }
  return j.dump();
}

PairModel PairModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw SchemaError("not a pair model document");
    }
    if (j.at("version").get<int>() != kModelVersion) {
      throw SchemaError("unsupported model version " + j.at("version").dump());
    }
    LearnerConfig config;
    config.kind = learner_kind_from_string(j.at("learner").get<std::string>());
    auto schema = j.at("schema").get<std::vector<std::string>>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    const json& hp = j.at("hyperparameters");
    const json& params = j.at("parameters");
    if (config.kind == LearnerKind::linear_logistic) {
      config.logistic = {hp.at("l2").get<double>(), hp.at("learning_rate").get<double>(),
                         hp.at("epochs").get<int>()};
      LinearModel m;
      m.means = params.at("means").get<std::vector<double>>();
      m.scales = params.at("scales").get<std::vector<double>>();
      m.weights = params.at("weights").get<std::vector<double>>();
      if (m.means.size() != schema.size() || m.scales.size() != schema.size() ||
          m.weights.size() != 2 * schema.size() + 1) {
        throw SchemaError("linear model parameters do not match the schema");
      }
      return PairModel(config.kind, std::move(schema), seed, std::move(m), config);
    }
    auto& g = config.gbt;
    g.trees = hp.at("trees").get<int>();
    g.max_depth = hp.at("max_depth").get<int>();
    g.learning_rate = hp.at("learning_rate").get<double>();
    g.min_child_weight = hp.at("min_child_weight").get<double>();
    g.lambda = hp.at("lambda").get<double>();
    g.gamma = hp.at("gamma").get<double>();
    g.subsample = hp.at("subsample").get<double>();
    g.colsample = hp.at("colsample").get<double>();
    TreeEnsemble e;
    e.base_score = params.at("base_score").get<double>();
    for (const json& tj : params.at("trees")) {
      Tree t;
      for (const json& nj : tj) {
        TreeNode n;
        if (nj.contains("leaf")) {
          n.leaf = true;
          n.value = nj.at("leaf").get<double>();
        } else {
          n.leaf = false;
          n.feature = nj.at("feature").get<std::int32_t>();
          n.threshold = nj.at("threshold").get<double>();
          n.default_left = nj.at("default_left").get<bool>();
          n.left = nj.at("left").get<std::int32_t>();
          n.right = nj.at("right").get<std::int32_t>();
          n.gain = nj.value("gain", 0.0);
          if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= schema.size()) {
            throw SchemaError("tree node references a feature outside the schema");
          }
        }
        n.cover = nj.value("cover", 0.0);
        t.nodes.push_back(n);
      }
      for (const TreeNode& n : t.nodes) {
        if (!n.leaf && (n.left < 0 || n.right < 0 ||
                        static_cast<std::size_t>(std::max(n.left, n.right)) >= t.nodes.size())) {
          throw SchemaError("tree node has an out-of-range child");
        }
      }
      if (t.nodes.empty()) throw SchemaError("empty tree");
      e.trees.push_back(std::move(t));
    }
    return PairModel(config.kind, std::move(schema), seed, std::move(e), config);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model JSON: ") + e.what());
  }
}

void PairModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model '" + path.string() + "'");
  out << to_json() << '\n';
}

PairModel PairModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::uint64_t PairModel::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace cdcr
