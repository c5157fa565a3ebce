// Depth-limited gradient-boosted regression trees on the log-odds scale.
// Exact greedy split search, level by level over presorted feature columns;
// rows missing a feature follow the node's learned default direction.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdcr/classifier.hpp"
#include "cdcr/random.hpp"

namespace cdcr {

double Tree::predict(const FeatureVector& row) const {
  std::size_t i = 0;
  while (!nodes[i].leaf) {
    const TreeNode& n = nodes[i];
    const bool go_left = row.present[n.feature] ? row.values[n.feature] < n.threshold
                                                : n.default_left;
    i = static_cast<std::size_t>(go_left ? n.left : n.right);
  }
  return nodes[i].value;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Split {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
  bool default_left = true;
};

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingData& data, const GbtParams& params,
              const std::vector<std::vector<std::uint32_t>>& sorted)
      : data_(data), params_(params), sorted_(sorted) {}

  Tree build(const std::vector<double>& grad, const std::vector<double>& hess,
             const std::vector<std::uint8_t>& in_sample, const std::vector<std::int32_t>& columns) {
    const std::size_t n = data_.size();
    Tree tree;
    node_of_.assign(n, -1);
    TreeNode root;
    NodeStats root_stats;
    for (std::size_t r = 0; r < n; ++r) {
      if (!in_sample[r]) continue;
      node_of_[r] = 0;
      root_stats.g += grad[r];
      root_stats.h += hess[r];
    }
    tree.nodes.push_back(root);
    stats_ = {root_stats};
    std::vector<std::int32_t> frontier{0};

    for (int depth = 0; !frontier.empty(); ++depth) {
      std::vector<Split> best(tree.nodes.size());
      if (depth < params_.max_depth) {
        for (std::int32_t f : columns) find_splits(f, grad, hess, frontier, best);
      }
      std::vector<std::int32_t> next;
      for (std::int32_t id : frontier) {
        const Split& s = best[id];
        if (s.feature < 0) {
          make_leaf(tree.nodes[id], stats_[id]);
          continue;
        }
        TreeNode& node = tree.nodes[id];
        node.leaf = false;
        node.feature = s.feature;
        node.threshold = s.threshold;
        node.default_left = s.default_left;
        node.gain = s.gain;
        node.cover = stats_[id].h;
        node.left = static_cast<std::int32_t>(tree.nodes.size());
        node.right = node.left + 1;
        next.push_back(node.left);
        next.push_back(node.right);
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats_.emplace_back();
        stats_.emplace_back();
      }
      // Route rows of split nodes to their children.
      for (std::size_t r = 0; r < n; ++r) {
        const std::int32_t id = node_of_[r];
        if (id < 0 || tree.nodes[id].leaf) continue;
        const TreeNode& node = tree.nodes[id];
        const FeatureVector& row = data_.rows[r];
        const bool left = row.present[node.feature] ? row.values[node.feature] < node.threshold
                                                    : node.default_left;
        const std::int32_t child = left ? node.left : node.right;
        node_of_[r] = child;
        stats_[child].g += grad[r];
        stats_[child].h += hess[r];
      }
      frontier = std::move(next);
    }
    return tree;
  }

 private:
  double score(double g, double h) const { return g * g / (h + params_.lambda); }

  void make_leaf(TreeNode& node, const NodeStats& s) const {
    node.leaf = true;
    node.cover = s.h;
    node.value = s.h + params_.lambda > 0 ? -s.g / (s.h + params_.lambda) * params_.learning_rate
                                          : 0.0;
  }

  void find_splits(std::int32_t f, const std::vector<double>& grad, const std::vector<double>& hess,
                   const std::vector<std::int32_t>& frontier, std::vector<Split>& best) const {
    const std::size_t nodes = best.size();
    std::vector<NodeStats> present(nodes);
    for (std::uint32_t r : sorted_[f]) {
      const std::int32_t id = node_of_[r];
      if (id < 0) continue;
      present[id].g += grad[r];
      present[id].h += hess[r];
    }
    std::vector<NodeStats> left(nodes);
    std::vector<double> last(nodes, 0.0);
    std::vector<std::uint8_t> seen(nodes, 0);
    std::vector<std::uint8_t> active(nodes, 0);
    for (std::int32_t id : frontier) active[id] = 1;

    for (std::uint32_t r : sorted_[f]) {
      const std::int32_t id = node_of_[r];
      if (id < 0 || !active[id]) continue;
      const double v = data_.rows[r].values[f];
      if (seen[id] && v > last[id]) {
        evaluate(f, 0.5 * (last[id] + v), left[id], present[id], stats_[id], best[id]);
      }
      seen[id] = 1;
      last[id] = v;
      left[id].g += grad[r];
      left[id].h += hess[r];
    }
  }

  void evaluate(std::int32_t f, double threshold, const NodeStats& left_present,
                const NodeStats& present, const NodeStats& total, Split& best) const {
    const NodeStats right_present{present.g - left_present.g, present.h - left_present.h};
    const NodeStats missing{total.g - present.g, total.h - present.h};
    const double parent = score(total.g, total.h);
    for (bool missing_left : {true, false}) {
      NodeStats l = left_present, r = right_present;
      if (missing_left) {
        l.g += missing.g;
        l.h += missing.h;
      } else {
        r.g += missing.g;
        r.h += missing.h;
      }
      if (l.h < params_.min_child_weight || r.h < params_.min_child_weight) continue;
      if (l.h <= 0 || r.h <= 0) continue;
      const double gain = 0.5 * (score(l.g, l.h) + score(r.g, r.h) - parent) - params_.gamma;
      if (gain > best.gain && gain > 1e-12) {
        best = {gain, f, threshold, missing_left};
      }
    }
  }

  const TrainingData& data_;
  const GbtParams& params_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  std::vector<std::int32_t> node_of_;
  std::vector<NodeStats> stats_;
};

}  // namespace

PairModel train_gbt(const TrainingData& data, const GbtParams& params, std::uint64_t seed) {
  const std::size_t positives = data.positives();
  if (positives == 0 || positives == data.size()) {
    throw InvalidArgument("train_gbt: need at least one positive and one negative example");
  }
  if (params.trees < 0 || params.max_depth < 0) throw InvalidArgument("train_gbt: negative size");
  const std::size_t n = data.size();
  const std::size_t features = data.names.size();

  std::vector<std::vector<std::uint32_t>> sorted(features);
  for (std::size_t f = 0; f < features; ++f) {
    for (std::uint32_t r = 0; r < n; ++r) {
      if (data.rows[r].present[f]) sorted[f].push_back(r);
    }
    std::stable_sort(sorted[f].begin(), sorted[f].end(), [&](std::uint32_t a, std::uint32_t b) {
      return data.rows[a].values[f] < data.rows[b].values[f];
    });
  }

  TreeEnsemble model;
  const double rate = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(rate / (1.0 - rate));

  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  std::vector<std::uint8_t> in_sample(n, 1);
  std::vector<std::int32_t> all_columns(features);
  std::iota(all_columns.begin(), all_columns.end(), 0);
  Rng rng(seed);
  TreeBuilder builder(data, params, sorted);

  for (int t = 0; t < params.trees; ++t) {
    for (std::size_t r = 0; r < n; ++r) {
      const double p = sigmoid(margin[r]);
      grad[r] = p - (data.labels[r] ? 1.0 : 0.0);
      hess[r] = std::max(p * (1.0 - p), 1e-16);
    }
    if (params.subsample < 1.0) {
      for (std::size_t r = 0; r < n; ++r) in_sample[r] = uniform_unit(rng) < params.subsample;
    }
    std::vector<std::int32_t> columns = all_columns;
    if (params.colsample < 1.0 && features > 0) {
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(params.colsample * static_cast<double>(features))));
      sample_prefix(columns, keep, rng);
      std::sort(columns.begin(), columns.end());
    }
    Tree tree = builder.build(grad, hess, in_sample, columns);
    for (std::size_t r = 0; r < n; ++r) margin[r] += tree.predict(data.rows[r]);
    model.trees.push_back(std::move(tree));
  }

  LearnerConfig config;
  config.kind = LearnerKind::gradient_boosted_trees;
  config.gbt = params;
  return PairModel(LearnerKind::gradient_boosted_trees, data.names, seed, std::move(model), config);
}

}  // namespace cdcr
