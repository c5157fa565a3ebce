#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cdcr/classifier.hpp"
#include "cdcr/random.hpp"

namespace cdcr {

namespace {

void sort_entries(ImportanceReport& report) {
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << *v;
  return out.str();
}

std::vector<double> predict_all(const PairModel& model, const TrainingData& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const FeatureVector& row : data.rows) out.push_back(model.predict_proba(row));
  return out;
}

double population_sd(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / xs.size());
}

}  // namespace

std::string ImportanceReport::to_tsv() const {
  std::ostringstream out;
  const char* label = method == Method::gain          ? "gain"
                      : method == Method::permutation ? "permutation"
                                                      : "coefficient";
  out << "feature\t" << label << '\n';
  out.precision(8);
  for (const auto& [name, value] : entries) out << name << '\t' << std::fixed << value << '\n';
  return out.str();
}

ImportanceReport gain_importance(const PairModel& model) {
  if (model.kind() != LearnerKind::gradient_boosted_trees) {
    throw InvalidArgument("gain importance needs a tree ensemble");
  }
  std::vector<double> gain(model.schema().size(), 0.0);
  for (const Tree& t : model.ensemble().trees) {
    for (const TreeNode& n : t.nodes) {
      if (!n.leaf) gain[n.feature] += n.gain;
    }
  }
  const double total = std::accumulate(gain.begin(), gain.end(), 0.0);
  ImportanceReport report;
  report.method = ImportanceReport::Method::gain;
  for (std::size_t j = 0; j < gain.size(); ++j) {
    report.entries.emplace_back(model.schema()[j], total > 0 ? gain[j] / total : 0.0);
  }
  sort_entries(report);
  return report;
}

ImportanceReport coefficient_importance(const PairModel& model, const TrainingData& data) {
  if (model.kind() != LearnerKind::linear_logistic) {
    throw InvalidArgument("coefficient importance needs a linear model");
  }
  const TrainingData d = data.names == model.schema() ? data : data.select_columns(model.schema());
  const LinearModel& m = model.linear();
  const LinearInputs in = linear_inputs(m, d.rows);
  ImportanceReport report;
  report.method = ImportanceReport::Method::coefficient;
  std::vector<double> column(in.rows);
  for (std::size_t j = 0; j < model.schema().size(); ++j) {
    double importance = 0.0;
    for (std::size_t k : {2 * j, 2 * j + 1}) {
      for (std::size_t r = 0; r < in.rows; ++r) column[r] = in.x[r * in.cols + k];
      importance += std::abs(m.weights[k]) * population_sd(column);
    }
    report.entries.emplace_back(model.schema()[j], importance);
  }
  sort_entries(report);
  return report;
}

double pair_f1(std::span<const double> probabilities, std::span<const std::uint8_t> labels,
               double threshold) {
  if (probabilities.size() != labels.size()) throw InvalidArgument("pair_f1: length mismatch");
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    if (predicted && labels[i]) ++tp;
    else if (predicted) ++fp;
    else if (labels[i]) ++fn;
  }
  return tp ? 2.0 * tp / static_cast<double>(2 * tp + fp + fn) : 0.0;
}

ImportanceReport permutation_importance(const PairModel& model, const TrainingData& data,
                                        const PairMetric& metric, std::uint64_t seed,
                                        int repeats) {
  const TrainingData d = data.names == model.schema() ? data : data.select_columns(model.schema());
  const double baseline = metric(predict_all(model, d), d.labels);
  ImportanceReport report;
  report.method = ImportanceReport::Method::permutation;
  Rng rng(seed);
  std::vector<FeatureVector> rows = d.rows;
  std::vector<double> probs(rows.size());
  std::vector<std::size_t> order(rows.size());
  for (std::size_t j = 0; j < model.schema().size(); ++j) {
    double drop = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      std::iota(order.begin(), order.end(), 0);
      shuffle(order, rng);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r].values[j] = d.rows[order[r]].values[j];
        rows[r].present[j] = d.rows[order[r]].present[j];
      }
      for (std::size_t r = 0; r < rows.size(); ++r) probs[r] = model.predict_proba(rows[r]);
      drop += baseline - metric(probs, d.labels);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      rows[r].values[j] = d.rows[r].values[j];
      rows[r].present[j] = d.rows[r].present[j];
    }
    const double mean = repeats > 0 ? drop / repeats : 0.0;
    report.entries.emplace_back(model.schema()[j], std::max(0.0, mean));
  }
  sort_entries(report);
  return report;
}

RfeResult rfe(const TrainingData& train_set, const TrainingData& dev, const LearnerConfig& config,
              std::uint64_t seed) {
  if (train_set.names.empty()) throw InvalidArgument("rfe: no features");
  RfeResult result;
  std::vector<std::string> current = train_set.names;
  // Dropping a feature no tree ever split on leaves an ensemble without column
  // sampling unchanged, so such steps reuse the previous model's scores.
  const bool reuse_unused = config.kind == LearnerKind::gradient_boosted_trees &&
                            config.gbt.colsample >= 1.0;
  std::vector<std::pair<std::string, double>> importance;
  double dev_f1 = 0.0;
  bool reuse = false;
  while (true) {
    if (!reuse) {
      const TrainingData tr = train_set.select_columns(current);
      const TrainingData dv = dev.select_columns(current);
      const PairModel model = train(tr, config, seed);
      dev_f1 = pair_f1(predict_all(model, dv), dv.labels);
      importance = config.kind == LearnerKind::gradient_boosted_trees
                       ? gain_importance(model).entries
                       : coefficient_importance(model, tr).entries;
    }
    result.trace.push_back({current, dev_f1});
    if (current.size() == 1) break;
    // Lowest importance; among ties, the feature latest in the schema goes first.
    std::size_t victim = 0;
    double lowest = INFINITY;
    for (std::size_t j = 0; j < current.size(); ++j) {
      const auto it = std::find_if(importance.begin(), importance.end(),
                                   [&](const auto& e) { return e.first == current[j]; });
      const double v = it == importance.end() ? 0.0 : it->second;
      if (v <= lowest) {
        lowest = v;
        victim = j;
      }
    }
    reuse = reuse_unused && lowest == 0.0;
    importance.erase(std::remove_if(importance.begin(), importance.end(),
                                    [&](const auto& e) { return e.first == current[victim]; }),
                     importance.end());
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(victim));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.trace.size(); ++i) {
    if (result.trace[i].dev_f1 >= result.trace[best].dev_f1) best = i;
  }
  result.selected = result.trace[best].features;
  return result;
}

BinaryScores binary_scores(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                           std::uint64_t pairs) {
  BinaryScores s;
  s.pairs = pairs;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.gold_positives = tp + fn;
  if (s.gold_positives == 0) return s;
  s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.f1 = *s.precision + *s.recall > 0 ? 2 * *s.precision * *s.recall / (*s.precision + *s.recall)
                                      : 0.0;
  return s;
}

LinkTypeReport evaluate_by_link_type(std::span<const double> probabilities,
                                     std::span<const MentionPair> pairs, double threshold) {
  if (probabilities.size() != pairs.size()) {
    throw InvalidArgument("evaluate_by_link_type: length mismatch");
  }
  std::array<std::array<std::uint64_t, 4>, 4> counts{};  // tp, fp, fn, pairs
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto& c = counts[static_cast<std::size_t>(pairs[i].link_type)];
    const bool predicted = probabilities[i] >= threshold;
    ++c[3];
    if (predicted && pairs[i].coreferring) ++c[0];
    else if (predicted) ++c[1];
    else if (pairs[i].coreferring) ++c[2];
  }
  LinkTypeReport report;
  std::array<std::uint64_t, 4> total{};
  double sum_p = 0, sum_r = 0, sum_f = 0;
  int populated = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    const auto& c = counts[t];
    report.by_type[t] = binary_scores(c[0], c[1], c[2], c[3]);
    for (std::size_t k = 0; k < 4; ++k) total[k] += c[k];
    if (report.by_type[t].f1) {
      sum_p += *report.by_type[t].precision;
      sum_r += *report.by_type[t].recall;
      sum_f += *report.by_type[t].f1;
      ++populated;
    }
  }
  report.overall = binary_scores(total[0], total[1], total[2], total[3]);
  if (populated) {
    report.macro_precision = sum_p / populated;
    report.macro_recall = sum_r / populated;
    report.macro_f1 = sum_f / populated;
  }
  return report;
}

LinkTypeReport evaluate_by_link_type(const PairModel& model, const FeatureMatrix& matrix,
                                     double threshold) {
  const std::vector<double> probs = model.predict_proba(matrix);
  return evaluate_by_link_type(probs, matrix.pairs, threshold);
}

std::string LinkTypeReport::to_tsv() const {
  std::ostringstream out;
  out << "link_type\tpairs\tgold_positives\tP\tR\tF1\n";
  auto row = [&](std::string_view name, const BinaryScores& s) {
    out << name << '\t' << s.pairs << '\t' << s.gold_positives << '\t'
        << format_optional(s.precision) << '\t' << format_optional(s.recall) << '\t'
        << format_optional(s.f1) << '\n';
  };
  for (std::size_t t = 0; t < 4; ++t) row(to_string(kLinkTypes[t]), by_type[t]);
  row("all", overall);
  out << "macro\t-\t-\t" << format_optional(macro_precision) << '\t'
      << format_optional(macro_recall) << '\t' << format_optional(macro_f1) << '\n';
  return out.str();
}

}  // namespace cdcr
