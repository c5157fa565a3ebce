#include <cmath>

#include "cdcr/classifier.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdcr;
using doctest::Approx;

namespace {

FeatureVector row(std::vector<double> values) {
  FeatureVector fv;
  fv.present.assign(values.size(), 1);
  fv.values = std::move(values);
  return fv;
}

/// x0 decides the label, x1 is noise.
TrainingData informative_and_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  TrainingData d;
  d.names = {"x0", "x1"};
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = uniform_unit(rng), x1 = uniform_unit(rng);
    d.rows.push_back(row({x0, x1}));
    d.labels.push_back(x0 > 0.6);
  }
  return d;
}

/// Either feature alone explains half the positives.
TrainingData disjunction(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  TrainingData d;
  d.names = {"x0", "x1"};
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = uniform_unit(rng), x1 = uniform_unit(rng);
    d.rows.push_back(row({x0, x1}));
    d.labels.push_back(x0 > 0.7 || x1 > 0.7);
  }
  return d;
}

double stump_gain(const std::vector<double>& g, const std::vector<double>& h,
                  const std::vector<std::size_t>& left, double lambda) {
  double gl = 0, hl = 0, gt = 0, ht = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    gt += g[i];
    ht += h[i];
  }
  for (std::size_t i : left) {
    gl += g[i];
    hl += h[i];
  }
  const double gr = gt - gl, hr = ht - hl;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - gt * gt / (ht + lambda));
}

}  // namespace

TEST_CASE("logistic gradient against central differences") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    LinearInputs in;
    in.rows = 5 + uniform_index(rng, 30);
    in.cols = 1 + uniform_index(rng, 8);
    in.x.resize(in.rows * in.cols);
    for (auto& x : in.x) x = 4 * uniform_unit(rng) - 2;
    std::vector<std::uint8_t> labels(in.rows);
    for (auto& y : labels) y = uniform_unit(rng) < 0.4;
    std::vector<double> w(in.cols + 1);
    for (auto& x : w) x = 2 * uniform_unit(rng) - 1;
    const double l2 = uniform_unit(rng) * 0.1;

    std::vector<double> grad;
    logistic_objective(w, in, labels, l2, &grad);
    double worst = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double step = 1e-5;
      auto up = w, down = w;
      up[j] += step;
      down[j] -= step;
      const double numeric = (logistic_objective(up, in, labels, l2, nullptr) -
                              logistic_objective(down, in, labels, l2, nullptr)) /
                             (2 * step);
      const double scale = std::max({std::abs(numeric), std::abs(grad[j]), 1e-8});
      worst = std::max(worst, std::abs(numeric - grad[j]) / scale);
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("linear model predictions") {
  LearnerConfig config;
  config.kind = LearnerKind::linear_logistic;
  LinearModel zero{{0.0}, {1.0}, {0.0, 0.0, 0.0}};
  const PairModel flat(LearnerKind::linear_logistic, {"x"}, 0, zero, config);
  CHECK(flat.predict_proba(row({3.0})) == Approx(0.5));

  LinearModel m{{1.0}, {2.0}, {0.8, -0.3, 0.1}};
  const PairModel model(LearnerKind::linear_logistic, {"x"}, 0, m, config);
  const double z = 0.8 * (3.0 - 1.0) / 2.0 - 0.3 + 0.1;
  CHECK(model.predict_proba(row({3.0})) == Approx(1 / (1 + std::exp(-z))));
  FeatureVector missing = row({3.0});
  missing.present[0] = 0;
  CHECK(model.predict_proba(missing) == Approx(1 / (1 + std::exp(-0.1))));
  double previous = 0;
  for (double x = -3; x <= 3; x += 0.5) {
    const double p = model.predict_proba(row({x}));
    CHECK(p > previous);
    previous = p;
  }
  CHECK_THROWS_AS(model.predict_proba(row({1.0, 2.0})), SchemaError);
}

TEST_CASE("trained logistic model separates informative data") {
  const auto train_set = informative_and_noise(300, 1);
  const auto model = train_logreg(train_set, {}, 0);
  const auto test = informative_and_noise(300, 2);
  std::vector<double> p;
  for (const auto& r : test.rows) p.push_back(model.predict_proba(r));
  CHECK(pair_f1(p, test.labels) > 0.85);
  const auto imp = coefficient_importance(model, train_set);
  CHECK(imp.entries.front().first == "x0");
}

TEST_CASE("depth-1 stump picks the best-gain threshold") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    TrainingData d;
    d.names = {"x"};
    const std::size_t n = 8 + uniform_index(rng, 20);
    for (std::size_t i = 0; i < n; ++i) {
      d.rows.push_back(row({static_cast<double>(uniform_index(rng, 10))}));
      d.labels.push_back(uniform_unit(rng) < 0.5);
    }
    if (d.positives() == 0 || d.positives() == n) continue;
    GbtParams params;
    params.trees = 1;
    params.max_depth = 1;
    params.min_child_weight = 0;
    const auto model = train_gbt(d, params, 0);

    const double rate = static_cast<double>(d.positives()) / n;
    std::vector<double> g(n), h(n, rate * (1 - rate));
    for (std::size_t i = 0; i < n; ++i) g[i] = rate - d.labels[i];
    std::vector<double> values;
    for (const auto& r : d.rows) values.push_back(r.values[0]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    double best_gain = 1e-12, best_threshold = NAN;
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      const double threshold = 0.5 * (values[v] + values[v + 1]);
      std::vector<std::size_t> left;
      for (std::size_t i = 0; i < n; ++i)
        if (d.rows[i].values[0] < threshold) left.push_back(i);
      const double gain = stump_gain(g, h, left, params.lambda);
      if (gain > best_gain) {
        best_gain = gain;
        best_threshold = threshold;
      }
    }
    const auto& root = model.ensemble().trees.at(0).nodes.at(0);
    if (std::isnan(best_threshold)) {
      CHECK(root.leaf);
    } else {
      REQUIRE_FALSE(root.leaf);
      CHECK(root.threshold == best_threshold);
      CHECK(root.gain == Approx(best_gain));
    }
  }
}

TEST_CASE("duplicating every row leaves the trees unchanged") {
  auto d = informative_and_noise(120, 5);
  GbtParams params;
  params.trees = 10;
  params.max_depth = 3;
  params.lambda = 0;
  params.min_child_weight = 0;
  const auto once = train_gbt(d, params, 0);
  auto twice = d;
  twice.rows.insert(twice.rows.end(), d.rows.begin(), d.rows.end());
  twice.labels.insert(twice.labels.end(), d.labels.begin(), d.labels.end());
  const auto again = train_gbt(twice, params, 0);
  for (std::size_t t = 0; t < once.ensemble().trees.size(); ++t) {
    const auto& a = once.ensemble().trees[t].nodes;
    const auto& b = again.ensemble().trees[t].nodes;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].feature == b[i].feature);
      CHECK(a[i].threshold == b[i].threshold);
      CHECK(a[i].value == Approx(b[i].value).epsilon(1e-9));
    }
  }
}

TEST_CASE("missing values follow the learned default direction") {
  TrainingData d;
  d.names = {"x"};
  for (int i = 0; i < 40; ++i) {
    FeatureVector r = row({static_cast<double>(i % 10)});
    // absent values only ever occur on positives
    if (i % 4 == 0) r.present[0] = 0;
    d.rows.push_back(r);
    d.labels.push_back(i % 4 == 0 || i % 10 > 6);
  }
  GbtParams params;
  params.trees = 20;
  params.max_depth = 2;
  params.min_child_weight = 0;
  const auto model = train_gbt(d, params, 0);
  FeatureVector missing = row({0.0});
  missing.present[0] = 0;
  CHECK(model.predict_proba(missing) > 0.5);
  CHECK(model.predict_proba(row({1.0})) < 0.5);
}

TEST_CASE("gain importance") {
  TrainingData d;
  d.names = {"a", "b"};
  for (int i = 0; i < 20; ++i) {
    d.rows.push_back(row({static_cast<double>(i), 1.0}));
    d.labels.push_back(i >= 10);
  }
  GbtParams params;
  params.trees = 1;
  params.max_depth = 1;
  params.min_child_weight = 0;
  const auto imp = gain_importance(train_gbt(d, params, 0));
  std::map<std::string, double> by_name(imp.entries.begin(), imp.entries.end());
  CHECK(by_name.at("a") == Approx(1.0));
  CHECK(by_name.at("b") == 0.0);
}

TEST_CASE("permutation importance of pure noise stays near zero") {
  const auto d = informative_and_noise(400, 9);
  const auto model = train_gbt(d, {}, 0);
  const PairMetric metric = [](std::span<const double> p, std::span<const std::uint8_t> y) {
    return pair_f1(p, y);
  };
  const auto imp = permutation_importance(model, d, metric, 3, 5);
  std::map<std::string, double> by_name(imp.entries.begin(), imp.entries.end());
  CHECK(std::abs(by_name.at("x1")) < 0.05);
  CHECK(by_name.at("x0") > 0.3);
}

TEST_CASE("recursive feature elimination") {
  for (LearnerKind kind : {LearnerKind::gradient_boosted_trees, LearnerKind::linear_logistic}) {
    LearnerConfig config;
    config.kind = kind;
    config.gbt.trees = 30;
    config.gbt.max_depth = 2;
    CAPTURE(to_string(kind));

    const auto noisy = rfe(informative_and_noise(300, 11), informative_and_noise(300, 12), config, 0);
    CHECK(noisy.selected == std::vector<std::string>{"x0"});
    CHECK(noisy.trace.size() == 2);

    const auto both = rfe(disjunction(400, 13), disjunction(400, 14), config, 0);
    CHECK(both.selected.size() == 2);

    const auto single = informative_and_noise(100, 15).select_columns({"x0"});
    CHECK(rfe(single, single, config, 0).selected == std::vector<std::string>{"x0"});
  }
}

TEST_CASE("per-link-type scores against hand counts") {
  std::vector<MentionPair> pairs;
  std::vector<double> p;
  // within_document: 10 pairs, labels 1 for the first 4; predicted 1 for first 3 and pair 9
  for (int i = 0; i < 10; ++i) {
    pairs.push_back({"a", "b", LinkType::within_document, i < 4});
    p.push_back(i < 3 || i == 9 ? 0.9 : 0.1);
  }
  // cross_topic: no positives, two false alarms
  for (int i = 0; i < 10; ++i) {
    pairs.push_back({"a", "b", LinkType::cross_topic, false});
    p.push_back(i < 2 ? 0.8 : 0.2);
  }
  const auto r = evaluate_by_link_type(p, pairs);
  const auto& wd = r.by_type[0];
  CHECK(wd.tp == 3);
  CHECK(wd.fp == 1);
  CHECK(wd.fn == 1);
  CHECK(*wd.precision == Approx(0.75));
  CHECK(*wd.recall == Approx(0.75));
  const auto& ct = r.by_type[3];
  CHECK(ct.fp == 2);
  CHECK_FALSE(ct.recall.has_value());
  CHECK(r.overall.fp == 3);
  CHECK(*r.macro_f1 == Approx(0.75));

  std::vector<double> perfect;
  for (const auto& x : pairs) perfect.push_back(x.coreferring ? 1.0 : 0.0);
  CHECK(*evaluate_by_link_type(perfect, pairs).by_type[0].f1 == 1.0);
  std::vector<double> none(pairs.size(), 0.0);
  CHECK(*evaluate_by_link_type(none, pairs).by_type[0].recall == 0.0);
}

TEST_CASE("model serialization round trip") {
  const auto d = informative_and_noise(100, 21);
  const auto dir = testing::scratch_dir("model");
  for (LearnerKind kind : {LearnerKind::gradient_boosted_trees, LearnerKind::linear_logistic}) {
    LearnerConfig config;
    config.kind = kind;
    const auto model = train(d, config, 3);
    model.save(dir / "m.json");
    const auto back = PairModel::load(dir / "m.json");
    CHECK(back.hash() == model.hash());
    CHECK(back.schema() == model.schema());
    for (const auto& r : d.rows) CHECK(back.predict_proba(r) == model.predict_proba(r));
    // same seed, same model
    CHECK(train(d, config, 3).hash() == model.hash());
  }
  CHECK_THROWS(PairModel::from_json("{\"kind\":\"forest\"}"));
}

TEST_CASE("training needs both classes") {
  TrainingData d;
  d.names = {"x"};
  d.rows = {row({1.0}), row({2.0})};
  d.labels = {1, 1};
  CHECK_THROWS_AS(train_gbt(d, {}, 0), InvalidArgument);
  CHECK_THROWS_AS(train_logreg(d, {}, 0), InvalidArgument);
}
