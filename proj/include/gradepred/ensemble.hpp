#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gradepred/data.hpp"
#include "gradepred/matrix.hpp"
#include "gradepred/tree.hpp"

namespace gradepred {

struct ForestParams {
  int num_trees = 100;
  bool bootstrap = true;
  std::optional<int> features_per_split;  // nullopt: floor(sqrt(d)); >= d: all
  int max_depth = -1;
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
  int num_classes = kNumGradeClasses;
  int threads = 1;

  bool operator==(const ForestParams&) const = default;
};

/// H(x) = (1/T) * sum_t h_t(x) over classification trees.
class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(ForestParams params, std::size_t num_features, std::vector<DecisionTree> trees);

  const ForestParams& params() const noexcept { return params_; }
  std::size_t num_features() const noexcept { return num_features_; }
  int num_classes() const noexcept { return params_.num_classes; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  std::vector<double> predict_proba(std::span<const double> x) const;

  bool operator==(const ForestModel&) const = default;

 private:
  ForestParams params_;
  std::size_t num_features_ = 0;
  std::vector<DecisionTree> trees_;
};

/// Tree t is grown on a bootstrap resample (n draws with replacement) and a
/// per-split feature subset, both seeded from (seed, t).
ForestModel train_random_forest(const Matrix& x, std::span<const int> y, const ForestParams& params);

enum class BoostingVariant { FirstOrder, SecondOrder };

struct BoostingParams {
  int num_stages = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 1;
  double lambda = 0.0;
  double gamma = 0.0;
  int num_classes = kNumGradeClasses;
  int threads = 1;

  static BoostingParams gradient_boosting_defaults();
  static BoostingParams second_order_defaults();

  bool operator==(const BoostingParams&) const = default;
};

/// F_k(x) = base_k + sum over stages of the class-k tree output; leaf outputs
/// already include the learning rate. Probabilities are softmax(F).
class BoostedModel {
 public:
  BoostedModel() = default;
  BoostedModel(BoostingVariant variant, BoostingParams params, std::size_t num_features,
               std::vector<double> base_scores, std::vector<std::vector<DecisionTree>> stages);

  BoostingVariant variant() const noexcept { return variant_; }
  const BoostingParams& params() const noexcept { return params_; }
  std::size_t num_features() const noexcept { return num_features_; }
  int num_classes() const noexcept { return static_cast<int>(base_scores_.size()); }
  const std::vector<double>& base_scores() const noexcept { return base_scores_; }
  const std::vector<std::vector<DecisionTree>>& stages() const noexcept { return stages_; }

  std::vector<double> predict_scores(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;

  bool operator==(const BoostedModel&) const = default;

 private:
  BoostingVariant variant_ = BoostingVariant::FirstOrder;
  BoostingParams params_;
  std::size_t num_features_ = 0;
  std::vector<double> base_scores_;
  std::vector<std::vector<DecisionTree>> stages_;
};

/// Mean multiclass log-loss on the training rows: once before the first stage,
/// then after every stage.
struct BoostingTrace {
  std::vector<double> train_loss;
};

/// Softmax log-loss boosting. Each stage fits, per class, a squared-error tree
/// to the residuals onehot(y) - p and sets each leaf to
/// learning_rate * sum(r) / sum(p(1-p)).
BoostedModel train_gradient_boosting(const Matrix& x, std::span<const int> y,
                                     const BoostingParams& params, BoostingTrace* trace = nullptr);

/// Regularized second-order boosting: per class, a tree grown on gradients
/// p - onehot(y) and hessians p(1-p) with leaf weights -G/(H+lambda), scaled
/// by the learning rate.
BoostedModel train_second_order_boosting(const Matrix& x, std::span<const int> y,
                                         const BoostingParams& params,
                                         BoostingTrace* trace = nullptr);

using Model = std::variant<ForestModel, BoostedModel>;

std::vector<double> predict_proba(const Model& model, std::span<const double> x);
/// argmax of predict_proba; ties go to the lowest class.
GradeClass predict_class(const Model& model, std::span<const double> x);
std::size_t num_features(const Model& model);

/// Total split gain per feature over all trees, normalized to sum to 1 (all
/// zeros when no tree ever split). Throws PreconditionError for an untrained
/// model.
std::vector<double> feature_importance(const Model& model);

/// Pairs importances with names, and the grouped view where user_emb_* and
/// challenge_emb_* collapse into "user embedding" / "challenge embedding".
std::map<std::string, double> named_importance(std::span<const double> importance,
                                               const std::vector<std::string>& names);
std::map<std::string, double> grouped_importance(const std::map<std::string, double>& named);

/// Mean of -log p_y over rows.
double mean_log_loss(const Matrix& probabilities, std::span<const int> y);

}  // namespace gradepred
