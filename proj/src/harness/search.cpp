#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "cdcr/harness.hpp"
#include "cdcr/random.hpp"

namespace cdcr {

using nlohmann::json;

std::size_t grid_size(const SearchSpace& space) {
  std::size_t n = 1;
  for (const auto& [name, values] : space) {
    if (values.empty()) throw InvalidArgument("search dimension '" + name + "' has no values");
    if (n > std::numeric_limits<std::size_t>::max() / values.size()) {
      return std::numeric_limits<std::size_t>::max();
    }
    n *= values.size();
  }
  return n;
}

namespace {

json grid_point(const SearchSpace& space, std::size_t index) {
  json point = json::object();
  for (const auto& [name, values] : space) {
    point[name] = values[index % values.size()];
    index /= values.size();
  }
  return point;
}

}  // namespace

TuneResult tune(const SearchSpace& space, int budget, std::uint64_t seed,
                const std::function<double(const json&)>& objective) {
  if (budget <= 0) throw InvalidArgument("tuning budget must be positive");
  const std::size_t size = grid_size(space);
  TuneResult result;
  if (size == 1) {
    result.best = grid_point(space, 0);
    return result;
  }
  Rng rng(seed);
  std::vector<std::size_t> order;
  if (size <= static_cast<std::size_t>(budget)) {
    order.resize(size);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
  } else {
    std::unordered_set<std::size_t> seen;
    while (order.size() < static_cast<std::size_t>(budget)) {
      const auto i = static_cast<std::size_t>(uniform_index(rng, size));
      if (seen.insert(i).second) order.push_back(i);
    }
  }
  for (std::size_t index : order) {
    TuneTrial trial{grid_point(space, index), 0.0};
    trial.score = objective(trial.params);
    if (!result.best_score || trial.score > *result.best_score) {
      result.best = trial.params;
      result.best_score = trial.score;
    }
    result.trials.push_back(std::move(trial));
  }
  return result;
}

std::vector<std::vector<std::vector<std::size_t>>> document_folds(const Corpus& corpus,
                                                                   bool by_topic, int folds,
                                                                   int repeats,
                                                                   std::uint64_t seed) {
  if (folds < 2 || repeats < 1) throw InvalidArgument("need at least 2 folds and 1 repetition");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.documents().size(); ++i) {
    const Document& d = corpus.document(i);
    groups[by_topic ? d.topic : d.topic + "\x1f" + d.subtopic].push_back(i);
  }
  if (groups.size() < 2) throw ValidationError("cross-validation needs at least two document groups");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(folds), groups.size());
  std::vector<const std::vector<std::size_t>*> ordered;
  for (const auto& [_, docs] : groups) ordered.push_back(&docs);

  std::vector<std::vector<std::vector<std::size_t>>> out;
  for (int r = 0; r < repeats; ++r) {
    auto shuffled = ordered;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    shuffle(shuffled, rng);
    std::vector<std::vector<std::size_t>> parts(k);
    for (std::size_t g = 0; g < shuffled.size(); ++g) {
      parts[g % k].insert(parts[g % k].end(), shuffled[g]->begin(), shuffled[g]->end());
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    out.push_back(std::move(parts));
  }
  return out;
}

LearnerConfig learner_from_json(const json& j, LearnerConfig base) {
  try {
    if (j.contains("kind")) base.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    if (base.kind == LearnerKind::linear_logistic) {
      auto& p = base.logistic;
      p.l2 = j.value("l2", p.l2);
      p.learning_rate = j.value("learning_rate", p.learning_rate);
      p.epochs = j.value("epochs", p.epochs);
    } else {
      auto& p = base.gbt;
      p.trees = j.value("trees", p.trees);
      p.max_depth = j.value("max_depth", p.max_depth);
      p.learning_rate = j.value("learning_rate", p.learning_rate);
      p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
      p.lambda = j.value("lambda", p.lambda);
      p.gamma = j.value("gamma", p.gamma);
      p.subsample = j.value("subsample", p.subsample);
      p.colsample = j.value("colsample", p.colsample);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("learner parameters: ") + e.what());
  }
  return base;
}

json learner_to_json(const LearnerConfig& c) {
  if (c.kind == LearnerKind::linear_logistic) {
    return {{"kind", to_string(c.kind)},
            {"l2", c.logistic.l2},
            {"learning_rate", c.logistic.learning_rate},
            {"epochs", c.logistic.epochs}};
  }
  return {{"kind", to_string(c.kind)},         {"trees", c.gbt.trees},
          {"max_depth", c.gbt.max_depth},      {"learning_rate", c.gbt.learning_rate},
          {"min_child_weight", c.gbt.min_child_weight}, {"lambda", c.gbt.lambda},
          {"gamma", c.gbt.gamma},              {"subsample", c.gbt.subsample},
          {"colsample", c.gbt.colsample}};
}

ClusterConfig cluster_config_from_json(const json& j, ClusterConfig base) {
  try {
    if (j.contains("linkage")) base.linkage = linkage_from_string(j.at("linkage").get<std::string>());
    if (j.contains("criterion")) {
      base.criterion = criterion_from_string(j.at("criterion").get<std::string>());
    }
    base.threshold = j.value("threshold", base.threshold);
    base.max_clusters = j.value("max_clusters", base.max_clusters);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("clustering parameters: ") + e.what());
  }
  base.validate();
  return base;
}

json cluster_config_to_json(const ClusterConfig& c) {
  return {{"linkage", to_string(c.linkage)},
          {"criterion", to_string(c.criterion)},
          {"threshold", c.threshold},
          {"max_clusters", c.max_clusters}};
}

}  // namespace cdcr
