#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gradepred/data.hpp"
#include "gradepred/matrix.hpp"

namespace gradepred {

enum class TreeMode { GiniClassification, SquaredErrorRegression, SecondOrder };

struct TreeParams {
  int max_depth = -1;  // < 0: unlimited; 0: a single leaf
  int min_samples_leaf = 1;
  int features_considered = 0;  // <= 0 or >= number of features: all
  std::uint64_t seed = 0;       // feature subsampling
  int num_classes = kNumGradeClasses;  // GiniClassification
  double lambda = 1.0;                 // SecondOrder
  double gamma = 0.0;                  // SecondOrder
};

/// Binary tree over dense feature rows: x[feature] <= threshold goes left.
///
/// Leaf payload width is num_classes for classification (a distribution) and
/// 1 otherwise (a real value).
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double gain = 0.0;     // split gain credited to `feature`
    double samples = 0.0;  // weighted training rows reaching the node
    std::size_t value_offset = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  DecisionTree() = default;
  DecisionTree(TreeMode mode, std::size_t num_features, std::size_t value_width,
               std::vector<Node> nodes, std::vector<double> values);

  TreeMode mode() const noexcept { return mode_; }
  std::size_t num_features() const noexcept { return num_features_; }
  std::size_t value_width() const noexcept { return value_width_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Index of the leaf reached by x.
  int leaf_for(std::span<const double> x) const;
  std::span<const double> leaf_value(int node) const {
    return {values_.data() + nodes_[static_cast<std::size_t>(node)].value_offset, value_width_};
  }
  std::span<const double> predict(std::span<const double> x) const { return leaf_value(leaf_for(x)); }

  /// Overwrites a width-1 leaf payload (boosting rescales leaves after fitting).
  void set_leaf_value(int node, double value);

  std::size_t leaf_count() const;
  std::size_t depth() const;

  bool operator==(const DecisionTree&) const = default;

 private:
  TreeMode mode_ = TreeMode::GiniClassification;
  std::size_t num_features_ = 0;
  std::size_t value_width_ = 1;
  std::vector<Node> nodes_;
  std::vector<double> values_;
};

/// Per-feature row order sorted by (value, row index); shared by every tree
/// trained on the same matrix. Throws DataError on NaN.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& x);
  std::span<const std::uint32_t> column(std::size_t feature) const { return order_[feature]; }

 private:
  std::vector<std::vector<std::uint32_t>> order_;
};

/// A fitted tree plus the leaf every in-bag training row landed in (-1 for
/// rows with zero weight).
struct TreeFit {
  DecisionTree tree;
  std::vector<int> row_leaf;
};

/// Greedy CART growth with exhaustive threshold search. Candidate thresholds
/// are midpoints between consecutive distinct values; ties prefer the lowest
/// feature index and then the lowest threshold. Row weights act as
/// multiplicities (bootstrap counts); rows with weight 0 are ignored.
TreeFit fit_classification_tree(const Matrix& x, const SortedColumns& sorted,
                                std::span<const int> y, std::span<const double> weights,
                                const TreeParams& params);
TreeFit fit_regression_tree(const Matrix& x, const SortedColumns& sorted,
                            std::span<const double> target, std::span<const double> weights,
                            const TreeParams& params);
/// Leaf weight -G / (H + lambda); split gain
/// 0.5 * [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma, accepted only when > 0.
TreeFit fit_second_order_tree(const Matrix& x, const SortedColumns& sorted,
                              std::span<const double> grad, std::span<const double> hess,
                              std::span<const double> weights, const TreeParams& params);

/// Convenience overloads: unit weights, presorting done internally.
DecisionTree train_tree(const Matrix& x, std::span<const int> y, const TreeParams& params);
DecisionTree train_regression_tree(const Matrix& x, std::span<const double> target,
                                   const TreeParams& params);
DecisionTree train_second_order_tree(const Matrix& x, std::span<const double> grad,
                                     std::span<const double> hess, const TreeParams& params);

/// -G / (H + lambda), with the denominator floored at 1e-16.
double second_order_leaf_weight(double grad_sum, double hess_sum, double lambda);

}  // namespace gradepred
