#include "gradepred/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gradepred/error.hpp"
#include "gradepred/rng.hpp"
#include "parallel.hpp"

namespace gradepred {

namespace {

constexpr double kMinPrior = 1e-12;
constexpr double kHessianFloor = 1e-16;

void check_training_data(const Matrix& x, std::span<const int> y, int num_classes) {
  if (x.rows() == 0) throw PreconditionError("training data is empty");
  if (y.size() != x.rows()) throw PreconditionError("labels and feature rows differ in length");
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  for (int label : y) {
    if (label < 0 || label >= num_classes) {
      throw PreconditionError("label " + std::to_string(label) + " outside [0, num_classes)");
    }
  }
}

void check_length(std::size_t expected, std::span<const double> x) {
  if (x.size() != expected) {
    throw PreconditionError("feature vector has " + std::to_string(x.size()) +
                            " entries, model expects " + std::to_string(expected));
  }
}

void softmax_in_place(std::span<double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - top);
    total += s;
  }
  for (auto& s : scores) s /= total;
}

}  // namespace

ForestModel::ForestModel(ForestParams params, std::size_t num_features,
                         std::vector<DecisionTree> trees)
    : params_(std::move(params)), num_features_(num_features), trees_(std::move(trees)) {}

std::vector<double> ForestModel::predict_proba(std::span<const double> x) const {
  if (trees_.empty()) throw PreconditionError("forest has no trees");
  check_length(num_features_, x);
  std::vector<double> proba(static_cast<std::size_t>(params_.num_classes), 0.0);
  for (const auto& tree : trees_) {
    const auto leaf = tree.predict(x);
    for (std::size_t k = 0; k < proba.size(); ++k) proba[k] += leaf[k];
  }
  for (auto& p : proba) p /= static_cast<double>(trees_.size());
  return proba;
}

ForestModel train_random_forest(const Matrix& x, std::span<const int> y,
                                const ForestParams& params) {
  check_training_data(x, y, params.num_classes);
  if (params.num_trees < 1) throw ConfigError("num_trees must be at least 1");
  const std::size_t n = x.rows();
  const auto d = static_cast<int>(x.cols());
  const int per_split = params.features_per_split
                            ? std::min(*params.features_per_split, d)
                            : std::max(1, static_cast<int>(std::floor(std::sqrt(d))));
  if (per_split < 1) throw ConfigError("features_per_split must be at least 1");

  const SortedColumns sorted(x);
  std::vector<DecisionTree> trees(static_cast<std::size_t>(params.num_trees));
  detail::parallel_for(trees.size(), params.threads, [&](std::size_t t) {
    const auto tree_seed = derive_seed(params.seed, t);
    std::vector<double> weights(n, 1.0);
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      Rng rng(derive_seed(tree_seed, 0xB007));
      for (std::size_t i = 0; i < n; ++i) weights[rng.uniform_index(n)] += 1.0;
    }
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.features_considered = per_split;
    tp.seed = tree_seed;
    tp.num_classes = params.num_classes;
    trees[t] = fit_classification_tree(x, sorted, y, weights, tp).tree;
  });
  return ForestModel(params, x.cols(), std::move(trees));
}

BoostingParams BoostingParams::gradient_boosting_defaults() { return {}; }

BoostingParams BoostingParams::second_order_defaults() {
  BoostingParams p;
  p.learning_rate = 0.3;
  p.max_depth = 6;
  p.lambda = 1.0;
  p.gamma = 0.0;
  return p;
}

BoostedModel::BoostedModel(BoostingVariant variant, BoostingParams params,
                           std::size_t num_features, std::vector<double> base_scores,
                           std::vector<std::vector<DecisionTree>> stages)
    : variant_(variant),
      params_(std::move(params)),
      num_features_(num_features),
      base_scores_(std::move(base_scores)),
      stages_(std::move(stages)) {
  for (const auto& stage : stages_) {
    if (stage.size() != base_scores_.size()) {
      throw PreconditionError("every boosting stage needs one tree per class");
    }
  }
}

std::vector<double> BoostedModel::predict_scores(std::span<const double> x) const {
  if (base_scores_.empty()) throw PreconditionError("boosted model is untrained");
  check_length(num_features_, x);
  std::vector<double> scores = base_scores_;
  for (const auto& stage : stages_) {
    for (std::size_t k = 0; k < stage.size(); ++k) scores[k] += stage[k].predict(x)[0];
  }
  return scores;
}

std::vector<double> BoostedModel::predict_proba(std::span<const double> x) const {
  auto scores = predict_scores(x);
  softmax_in_place(scores);
  return scores;
}

namespace {

BoostedModel train_boosting(const Matrix& x, std::span<const int> y, const BoostingParams& params,
                            BoostingVariant variant, BoostingTrace* trace) {
  check_training_data(x, y, params.num_classes);
  if (params.num_stages < 0) throw ConfigError("num_stages must be non-negative");
  if (!(params.learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (params.lambda < 0.0 || params.gamma < 0.0) {
    throw ConfigError("lambda and gamma must be non-negative");
  }
  const std::size_t n = x.rows();
  const auto classes = static_cast<std::size_t>(params.num_classes);

  std::vector<double> base(classes, 0.0);
  for (int label : y) base[static_cast<std::size_t>(label)] += 1.0;
  for (auto& b : base) b = std::log(std::max(b / static_cast<double>(n), kMinPrior));

  Matrix scores(n, classes);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(base.begin(), base.end(), scores.row(i).begin());
  }
  Matrix proba(n, classes);
  auto refresh_proba = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      auto p = proba.row(i);
      std::copy(scores.row(i).begin(), scores.row(i).end(), p.begin());
      softmax_in_place(p);
    }
  };
  refresh_proba();
  if (trace) {
    trace->train_loss.clear();
    trace->train_loss.push_back(mean_log_loss(proba, y));
  }

  const SortedColumns sorted(x);
  const std::vector<double> unit(n, 1.0);
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_leaf = params.min_samples_leaf;
  tp.lambda = params.lambda;
  tp.gamma = params.gamma;

  std::vector<std::vector<DecisionTree>> stages;
  stages.reserve(static_cast<std::size_t>(params.num_stages));
  for (int stage = 0; stage < params.num_stages; ++stage) {
    std::vector<DecisionTree> trees(classes);
    std::vector<std::vector<double>> deltas(classes);
    detail::parallel_for(classes, params.threads, [&](std::size_t k) {
      std::vector<double> a(n);
      std::vector<double> b(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = proba(i, k);
        const double target = static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0;
        if (variant == BoostingVariant::FirstOrder) {
          a[i] = target - p;  // residual
        } else {
          a[i] = p - target;  // gradient
        }
        b[i] = p * (1.0 - p);  // hessian
      }

      TreeFit fit = variant == BoostingVariant::FirstOrder
                        ? fit_regression_tree(x, sorted, a, unit, tp)
                        : fit_second_order_tree(x, sorted, a, b, unit, tp);

      // Leaf outputs: Newton step for first order, -G/(H+lambda) for second
      // order (already in the tree); both scaled by the learning rate.
      const auto& nodes = fit.tree.nodes();
      std::vector<double> num(nodes.size(), 0.0);
      std::vector<double> den(nodes.size(), 0.0);
      if (variant == BoostingVariant::FirstOrder) {
        for (std::size_t i = 0; i < n; ++i) {
          const auto leaf = static_cast<std::size_t>(fit.row_leaf[i]);
          num[leaf] += a[i];
          den[leaf] += b[i];
        }
      }
      for (std::size_t node = 0; node < nodes.size(); ++node) {
        if (!nodes[node].is_leaf()) continue;
        const double raw = variant == BoostingVariant::FirstOrder
                               ? num[node] / std::max(den[node], kHessianFloor)
                               : fit.tree.leaf_value(static_cast<int>(node))[0];
        fit.tree.set_leaf_value(static_cast<int>(node), params.learning_rate * raw);
      }
      deltas[k].resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        deltas[k][i] = fit.tree.leaf_value(fit.row_leaf[i])[0];
      }
      trees[k] = std::move(fit.tree);
    });
    for (std::size_t k = 0; k < classes; ++k) {
      for (std::size_t i = 0; i < n; ++i) scores(i, k) += deltas[k][i];
    }
    refresh_proba();
    if (trace) trace->train_loss.push_back(mean_log_loss(proba, y));
    stages.push_back(std::move(trees));
  }
  return BoostedModel(variant, params, x.cols(), std::move(base), std::move(stages));
}

}  // namespace

BoostedModel train_gradient_boosting(const Matrix& x, std::span<const int> y,
                                     const BoostingParams& params, BoostingTrace* trace) {
  return train_boosting(x, y, params, BoostingVariant::FirstOrder, trace);
}

BoostedModel train_second_order_boosting(const Matrix& x, std::span<const int> y,
                                         const BoostingParams& params, BoostingTrace* trace) {
  return train_boosting(x, y, params, BoostingVariant::SecondOrder, trace);
}

std::vector<double> predict_proba(const Model& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.predict_proba(x); }, model);
}

GradeClass predict_class(const Model& model, std::span<const double> x) {
  const auto p = predict_proba(model, x);
  const auto best = std::max_element(p.begin(), p.end());  // first maximum
  return GradeClass(static_cast<int>(best - p.begin()));
}

std::size_t num_features(const Model& model) {
  return std::visit([](const auto& m) { return m.num_features(); }, model);
}

std::vector<double> feature_importance(const Model& model) {
  std::vector<const DecisionTree*> trees;
  std::size_t features = 0;
  if (const auto* forest = std::get_if<ForestModel>(&model)) {
    for (const auto& t : forest->trees()) trees.push_back(&t);
    features = forest->num_features();
  } else {
    const auto& boosted = std::get<BoostedModel>(model);
    for (const auto& stage : boosted.stages()) {
      for (const auto& t : stage) trees.push_back(&t);
    }
    features = boosted.num_features();
    if (boosted.base_scores().empty()) trees.clear();
  }
  if (trees.empty() || features == 0) {
    throw PreconditionError("feature importance needs a trained model with at least one tree");
  }
  std::vector<double> importance(features, 0.0);
  for (const auto* tree : trees) {
    for (const auto& node : tree->nodes()) {
      if (!node.is_leaf()) importance[static_cast<std::size_t>(node.feature)] += node.gain;
    }
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : importance) v /= total;
  }
  return importance;
}

std::map<std::string, double> named_importance(std::span<const double> importance,
                                               const std::vector<std::string>& names) {
  if (importance.size() != names.size()) {
    throw PreconditionError("importance and feature name counts differ");
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = importance[i];
  return out;
}

std::map<std::string, double> grouped_importance(const std::map<std::string, double>& named) {
  std::map<std::string, double> out;
  for (const auto& [name, value] : named) {
    if (name.rfind("user_emb_", 0) == 0) {
      out["user embedding"] += value;
    } else if (name.rfind("challenge_emb_", 0) == 0) {
      out["challenge embedding"] += value;
    } else {
      out[name] += value;
    }
  }
  return out;
}

double mean_log_loss(const Matrix& probabilities, std::span<const int> y) {
  if (probabilities.rows() != y.size() || y.empty()) {
    throw PreconditionError("probabilities and labels differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = probabilities(i, static_cast<std::size_t>(y[i]));
    total -= std::log(std::max(p, std::numeric_limits<double>::min()));
  }
  return total / static_cast<double>(y.size());
}

}  // namespace gradepred
