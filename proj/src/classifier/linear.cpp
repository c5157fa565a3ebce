#include <cmath>

#include "cdcr/classifier.hpp"

namespace cdcr {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LinearInputs linear_inputs(const LinearModel& model, std::span<const FeatureVector> rows) {
  const std::size_t n = model.means.size();
  LinearInputs in;
  in.rows = rows.size();
  in.cols = 2 * n;
  in.x.assign(in.rows * in.cols, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double* out = in.x.data() + r * in.cols;
    for (std::size_t j = 0; j < n; ++j) {
      if (rows[r].present[j]) {
        out[2 * j] = (rows[r].values[j] - model.means[j]) / model.scales[j];
        out[2 * j + 1] = 1.0;
      }
    }
  }
  return in;
}

double logistic_objective(std::span<const double> weights, const LinearInputs& inputs,
                          std::span<const std::uint8_t> labels, double l2,
                          std::vector<double>* gradient) {
  const std::size_t cols = inputs.cols;
  if (weights.size() != cols + 1) throw InvalidArgument("logistic: weight vector size mismatch");
  if (gradient) gradient->assign(cols + 1, 0.0);
  const double inv_n = inputs.rows ? 1.0 / static_cast<double>(inputs.rows) : 0.0;
  double loss = 0.0;
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    const auto x = inputs.row(r);
    double z = weights[cols];
    for (std::size_t j = 0; j < cols; ++j) z += weights[j] * x[j];
    const double y = labels[r] ? 1.0 : 0.0;
    loss += softplus(z) - y * z;
    if (gradient) {
      const double residual = (sigmoid(z) - y) * inv_n;
      for (std::size_t j = 0; j < cols; ++j) (*gradient)[j] += residual * x[j];
      (*gradient)[cols] += residual;
    }
  }
  loss *= inv_n;
  double penalty = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    penalty += weights[j] * weights[j];
    if (gradient) (*gradient)[j] += l2 * weights[j];
  }
  return loss + 0.5 * l2 * penalty;
}

PairModel train_logreg(const TrainingData& data, const LogisticParams& params, std::uint64_t seed) {
  const std::size_t positives = data.positives();
  if (positives == 0 || positives == data.size()) {
    throw InvalidArgument("train_logreg: need at least one positive and one negative example");
  }
  const std::size_t n = data.names.size();
  LinearModel model;
  model.means.assign(n, 0.0);
  model.scales.assign(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const FeatureVector& row : data.rows) {
      if (!row.present[j]) continue;
      sum += row.values[j];
      ++count;
    }
    if (count == 0) continue;
    const double mean = sum / count;
    for (const FeatureVector& row : data.rows) {
      if (row.present[j]) sq += (row.values[j] - mean) * (row.values[j] - mean);
    }
    const double sd = std::sqrt(sq / count);
    model.means[j] = mean;
    model.scales[j] = sd > 1e-12 ? sd : 1.0;
  }
  const LinearInputs inputs = linear_inputs(model, data.rows);
  model.weights.assign(inputs.cols + 1, 0.0);
  std::vector<double> gradient;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    logistic_objective(model.weights, inputs, data.labels, params.l2, &gradient);
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
      model.weights[j] -= params.learning_rate * gradient[j];
    }
  }
  LearnerConfig config;
  config.kind = LearnerKind::linear_logistic;
  config.logistic = params;
  return PairModel(LearnerKind::linear_logistic, data.names, seed, std::move(model), config);
}

}  // namespace cdcr
