#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cdcr/features.hpp"

namespace cdcr {

struct TrainingData {
  std::vector<std::string> names;
  std::vector<FeatureVector> rows;
  std::vector<std::uint8_t> labels;

  static TrainingData from(const FeatureMatrix& matrix);
  std::size_t size() const { return rows.size(); }
  std::size_t positives() const;
  TrainingData select_rows(std::span<const std::size_t> indices) const;
  TrainingData select_columns(const std::vector<std::string>& schema) const;
};

// ---------------------------------------------------------------------------
// Linear-logistic learner

struct LogisticParams {
  double l2 = 1e-3;
  double learning_rate = 0.5;
  int epochs = 300;
};

/// Standardized value plus presence flag per feature, then the model weights.
struct LinearModel {
  std::vector<double> means;
  std::vector<double> scales;
  /// 2 per feature (standardized value, presence) followed by the bias.
  std::vector<double> weights;
};

/// Row-major design matrix of the linear learner (2 inputs per feature).
struct LinearInputs {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;
  std::span<const double> row(std::size_t r) const { return {x.data() + r * cols, cols}; }
};

LinearInputs linear_inputs(const LinearModel& model, std::span<const FeatureVector> rows);

/// Mean log-loss plus (l2/2)|w|^2 over non-bias weights. `weights` holds
/// `inputs.cols` weights followed by the bias. Fills `gradient` when given.
double logistic_objective(std::span<const double> weights, const LinearInputs& inputs,
                          std::span<const std::uint8_t> labels, double l2,
                          std::vector<double>* gradient);

// ---------------------------------------------------------------------------
// Gradient-boosted trees

struct GbtParams {
  int trees = 100;
  int max_depth = 4;
  double learning_rate = 0.3;
  double min_child_weight = 1.0;
  double lambda = 1.0;
  double gamma = 0.0;
  double subsample = 1.0;
  double colsample = 1.0;
};

struct TreeNode {
  bool leaf = true;
  std::int32_t feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
  double gain = 0.0;
  double cover = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(const FeatureVector& row) const;
};

struct TreeEnsemble {
  double base_score = 0.0;
  std::vector<Tree> trees;
};

// ---------------------------------------------------------------------------

enum class LearnerKind { linear_logistic, gradient_boosted_trees };

std::string_view to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(std::string_view name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::gradient_boosted_trees;
  LogisticParams logistic;
  GbtParams gbt;
};

class PairModel {
 public:
  PairModel() = default;
  PairModel(LearnerKind kind, std::vector<std::string> schema, std::uint64_t seed,
            std::variant<LinearModel, TreeEnsemble> params, LearnerConfig config);

  LearnerKind kind() const { return kind_; }
  const std::vector<std::string>& schema() const { return schema_; }
  std::uint64_t seed() const { return seed_; }
  const LearnerConfig& config() const { return config_; }
  const LinearModel& linear() const { return std::get<LinearModel>(params_); }
  const TreeEnsemble& ensemble() const { return std::get<TreeEnsemble>(params_); }

  double decision(const FeatureVector& row) const;
  /// In (0, 1); throws SchemaError when the row width differs from the schema.
  double predict_proba(const FeatureVector& row) const;
  /// Predicts on a matrix whose names may be a superset of the schema.
  std::vector<double> predict_proba(const FeatureMatrix& matrix) const;

  std::string to_json() const;
  static PairModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static PairModel load(const std::filesystem::path& path);
  /// FNV-1a of the serialized form.
  std::uint64_t hash() const;

 private:
  LearnerKind kind_ = LearnerKind::gradient_boosted_trees;
  std::vector<std::string> schema_;
  std::uint64_t seed_ = 0;
  std::variant<LinearModel, TreeEnsemble> params_;
  LearnerConfig config_;
};

PairModel train_logreg(const TrainingData& data, const LogisticParams& params, std::uint64_t seed);
PairModel train_gbt(const TrainingData& data, const GbtParams& params, std::uint64_t seed);
PairModel train(const TrainingData& data, const LearnerConfig& config, std::uint64_t seed);

/// Mean log-loss of a model on data.
double log_loss(const PairModel& model, const TrainingData& data);

// ---------------------------------------------------------------------------
// Importance and selection

struct ImportanceReport {
  enum class Method { gain, permutation, coefficient };
  Method method = Method::gain;
  std::vector<std::pair<std::string, double>> entries;

  std::string to_tsv() const;
};

ImportanceReport gain_importance(const PairModel& model);
/// |weight| of the standardized input (coefficient times feature std) plus the
/// presence weight scaled by the presence flag's std.
ImportanceReport coefficient_importance(const PairModel& model, const TrainingData& data);

using PairMetric = std::function<double(std::span<const double> probabilities,
                                        std::span<const std::uint8_t> labels)>;

/// Binarized F1 with "coreferring" as the positive class.
double pair_f1(std::span<const double> probabilities, std::span<const std::uint8_t> labels,
               double threshold = 0.5);

ImportanceReport permutation_importance(const PairModel& model, const TrainingData& data,
                                        const PairMetric& metric, std::uint64_t seed,
                                        int repeats);

struct RfeStep {
  std::vector<std::string> features;
  double dev_f1 = 0.0;
};

struct RfeResult {
  std::vector<std::string> selected;
  std::vector<RfeStep> trace;
};

RfeResult rfe(const TrainingData& train, const TrainingData& dev, const LearnerConfig& config,
              std::uint64_t seed);

// ---------------------------------------------------------------------------

struct BinaryScores {
  std::uint64_t pairs = 0;
  std::uint64_t gold_positives = 0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
  /// Unset when the type has no gold positives.
  std::optional<double> precision, recall, f1;
};

BinaryScores binary_scores(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                           std::uint64_t pairs);

struct LinkTypeReport {
  std::array<BinaryScores, 4> by_type;
  BinaryScores overall;
  /// Macro average over populated link types.
  std::optional<double> macro_precision, macro_recall, macro_f1;

  std::string to_tsv() const;
};

LinkTypeReport evaluate_by_link_type(std::span<const double> probabilities,
                                     std::span<const MentionPair> pairs, double threshold = 0.5);
LinkTypeReport evaluate_by_link_type(const PairModel& model, const FeatureMatrix& matrix,
                                     double threshold = 0.5);

}  // namespace cdcr
