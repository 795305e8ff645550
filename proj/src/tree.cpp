#include "gradepred/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gradepred/error.hpp"
#include "gradepred/rng.hpp"

namespace gradepred {

DecisionTree::DecisionTree(TreeMode mode, std::size_t num_features, std::size_t value_width,
                           std::vector<Node> nodes, std::vector<double> values)
    : mode_(mode),
      num_features_(num_features),
      value_width_(value_width),
      nodes_(std::move(nodes)),
      values_(std::move(values)) {
  if (nodes_.empty()) throw PreconditionError("a tree needs at least one node");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      if (n.value_offset + value_width_ > values_.size()) {
        throw PreconditionError("leaf payload out of range");
      }
    } else {
      const auto count = static_cast<int>(nodes_.size());
      if (static_cast<std::size_t>(n.feature) >= num_features_ || n.left <= static_cast<int>(i) ||
          n.right <= static_cast<int>(i) || n.left >= count || n.right >= count) {
        throw PreconditionError("malformed split node");
      }
    }
  }
}

int DecisionTree::leaf_for(std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw PreconditionError("feature vector has " + std::to_string(x.size()) +
                            " entries, tree expects " + std::to_string(num_features_));
  }
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

void DecisionTree::set_leaf_value(int node, double value) {
  auto& n = nodes_.at(static_cast<std::size_t>(node));
  if (!n.is_leaf() || value_width_ != 1) throw PreconditionError("not a scalar leaf");
  values_[n.value_offset] = value;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

SortedColumns::SortedColumns(const Matrix& x) : order_(x.cols()) {
  if (x.rows() > std::numeric_limits<std::uint32_t>::max()) {
    throw PreconditionError("too many rows for 32-bit row indices");
  }
  for (double v : x.data()) {
    if (std::isnan(v)) throw DataError("feature matrix contains NaN");
  }
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& order = order_[f];
    order.resize(x.rows());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double va = x(a, f);
      const double vb = x(b, f);
      return va < vb || (va == vb && a < b);
    });
  }
}

double second_order_leaf_weight(double grad_sum, double hess_sum, double lambda) {
  return -grad_sum / std::max(hess_sum + lambda, 1e-16);
}

namespace {

// Each criterion provides: Stats, empty(), add(), count(), pure(), gain(),
// accept(), and leaf() writing the payload.

class GiniCriterion {
 public:
  struct Stats {
    std::vector<double> counts;
    double total = 0.0;
  };

  GiniCriterion(std::span<const int> y, std::span<const double> w, int classes)
      : y_(y), w_(w), classes_(static_cast<std::size_t>(classes)) {}

  std::size_t width() const { return classes_; }
  Stats empty() const { return {std::vector<double>(classes_, 0.0), 0.0}; }
  void add(Stats& s, std::uint32_t r) const {
    s.counts[static_cast<std::size_t>(y_[r])] += w_[r];
    s.total += w_[r];
  }
  double count(const Stats& s) const { return s.total; }
  bool pure(const Stats& s) const {
    return std::count_if(s.counts.begin(), s.counts.end(), [](double c) { return c > 0.0; }) <= 1;
  }
  // Impurity decrease times weighted node size.
  double gain(const Stats& parent, const Stats& left) const {
    const double right_total = parent.total - left.total;
    double sl = 0.0;
    double sr = 0.0;
    double sp = 0.0;
    for (std::size_t k = 0; k < classes_; ++k) {
      const double l = left.counts[k];
      const double r = parent.counts[k] - l;
      sl += l * l;
      sr += r * r;
      sp += parent.counts[k] * parent.counts[k];
    }
    return sl / left.total + sr / right_total - sp / parent.total;
  }
  bool accept(double gain, const Stats& parent) const {
    // Gains at round-off level are not real improvements.
    return gain > 1e-12 * std::max(1.0, parent.total);
  }
  void leaf(const Stats& s, std::vector<double>& values) const {
    for (double c : s.counts) values.push_back(c / s.total);
  }

 private:
  std::span<const int> y_;
  std::span<const double> w_;
  std::size_t classes_;
};

class SquaredErrorCriterion {
 public:
  struct Stats {
    double sum = 0.0;
    double total = 0.0;
  };

  SquaredErrorCriterion(std::span<const double> t, std::span<const double> w) : t_(t), w_(w) {}

  std::size_t width() const { return 1; }
  Stats empty() const { return {}; }
  void add(Stats& s, std::uint32_t r) const {
    s.sum += w_[r] * t_[r];
    s.total += w_[r];
  }
  double count(const Stats& s) const { return s.total; }
  bool pure(const Stats&) const { return false; }
  // Variance reduction times weighted node size.
  double gain(const Stats& parent, const Stats& left) const {
    const double rs = parent.sum - left.sum;
    const double rt = parent.total - left.total;
    return left.sum * left.sum / left.total + rs * rs / rt - parent.sum * parent.sum / parent.total;
  }
  bool accept(double gain, const Stats& parent) const {
    return gain > 1e-12 * std::max(1.0, parent.sum * parent.sum / parent.total);
  }
  void leaf(const Stats& s, std::vector<double>& values) const { values.push_back(s.sum / s.total); }

 private:
  std::span<const double> t_;
  std::span<const double> w_;
};

class SecondOrderCriterion {
 public:
  struct Stats {
    double grad = 0.0;
    double hess = 0.0;
    double total = 0.0;
  };

  SecondOrderCriterion(std::span<const double> g, std::span<const double> h,
                       std::span<const double> w, double lambda, double gamma)
      : g_(g), h_(h), w_(w), lambda_(lambda), gamma_(gamma) {}

  std::size_t width() const { return 1; }
  Stats empty() const { return {}; }
  void add(Stats& s, std::uint32_t r) const {
    s.grad += w_[r] * g_[r];
    s.hess += w_[r] * h_[r];
    s.total += w_[r];
  }
  double count(const Stats& s) const { return s.total; }
  bool pure(const Stats&) const { return false; }
  double gain(const Stats& parent, const Stats& left) const {
    const double gr = parent.grad - left.grad;
    const double hr = parent.hess - left.hess;
    return 0.5 * (score(left.grad, left.hess) + score(gr, hr) - score(parent.grad, parent.hess)) -
           gamma_;
  }
  bool accept(double gain, const Stats&) const { return gain > 0.0; }
  void leaf(const Stats& s, std::vector<double>& values) const {
    values.push_back(second_order_leaf_weight(s.grad, s.hess, lambda_));
  }

 private:
  double score(double g, double h) const { return g * g / std::max(h + lambda_, 1e-16); }

  std::span<const double> g_;
  std::span<const double> h_;
  std::span<const double> w_;
  double lambda_;
  double gamma_;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

template <class Criterion>
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const SortedColumns& sorted, std::span<const double> weights,
              const Criterion& crit, const TreeParams& params, TreeMode mode)
      : x_(x), crit_(crit), params_(params), mode_(mode), rng_(derive_seed(params.seed, 0x77EE)) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    order_.resize(d);
    for (std::size_t f = 0; f < d; ++f) {
      const auto col = sorted.column(f);
      auto& o = order_[f];
      o.reserve(n);
      for (auto r : col) {
        if (weights[r] > 0.0) o.push_back(r);
      }
    }
    goes_left_.assign(n, 0);
    scratch_.resize(order_.empty() ? 0 : order_[0].size());
    row_leaf_.assign(n, -1);
    all_features_.resize(d);
    std::iota(all_features_.begin(), all_features_.end(), 0);
  }

  TreeFit build() {
    struct Pending {
      std::size_t begin, end;
      int depth;
      int node;
    };
    const std::size_t in_bag = order_.empty() ? 0 : order_[0].size();
    if (in_bag == 0) throw PreconditionError("cannot grow a tree without training rows");

    nodes_.emplace_back();
    std::vector<Pending> stack{{0, in_bag, 0, 0}};
    while (!stack.empty()) {
      const auto item = stack.back();
      stack.pop_back();

      auto stats = crit_.empty();
      for (std::size_t i = item.begin; i < item.end; ++i) crit_.add(stats, order_[0][i]);
      nodes_[static_cast<std::size_t>(item.node)].samples = crit_.count(stats);

      Split split;
      const bool depth_ok = params_.max_depth < 0 || item.depth < params_.max_depth;
      const double min_leaf = static_cast<double>(std::max(1, params_.min_samples_leaf));
      if (depth_ok && crit_.count(stats) >= 2.0 * min_leaf && !crit_.pure(stats)) {
        split = find_split(item.begin, item.end, stats, min_leaf);
      }
      if (split.feature < 0 || !crit_.accept(split.gain, stats)) {
        make_leaf(item.node, stats, item.begin, item.end);
        continue;
      }

      const auto mid = partition(item.begin, item.end, split);
      const int left = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      auto& node = nodes_[static_cast<std::size_t>(item.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.gain = split.gain;
      node.left = left;
      node.right = left + 1;
      stack.push_back({mid, item.end, item.depth + 1, left + 1});
      stack.push_back({item.begin, mid, item.depth + 1, left});
    }
    return {DecisionTree(mode_, x_.cols(), crit_.width(), std::move(nodes_), std::move(values_)),
            std::move(row_leaf_)};
  }

 private:
  std::vector<int> candidate_features() {
    const auto d = all_features_.size();
    const auto k = static_cast<std::size_t>(params_.features_considered);
    if (params_.features_considered <= 0 || k >= d) return all_features_;
    std::vector<int> pool = all_features_;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + rng_.uniform_index(d - i)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  Split find_split(std::size_t begin, std::size_t end, const typename Criterion::Stats& parent,
                   double min_leaf) {
    Split best;
    auto left = crit_.empty();
    for (int f : candidate_features()) {
      const auto& o = order_[static_cast<std::size_t>(f)];
      left = crit_.empty();
      const double total = crit_.count(parent);
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const auto r = o[i];
        crit_.add(left, r);
        const double v = x_(r, static_cast<std::size_t>(f));
        const double next = x_(o[i + 1], static_cast<std::size_t>(f));
        if (!(next > v)) continue;
        const double nl = crit_.count(left);
        if (nl < min_leaf) continue;
        if (total - nl < min_leaf) break;
        const double gain = crit_.gain(parent, left);
        if (gain > best.gain) {
          double threshold = v + (next - v) / 2.0;
          if (!(threshold < next)) threshold = v;
          best = {f, threshold, gain};
        }
      }
    }
    return best;
  }

  std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto f = static_cast<std::size_t>(split.feature);
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = order_[f][i];
      goes_left_[r] = x_(r, f) <= split.threshold ? 1 : 0;
    }
    std::size_t mid = begin;
    for (auto& o : order_) {
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto row = o[i];
        if (goes_left_[row]) {
          o[l++] = row;
        } else {
          scratch_[r++] = row;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                o.begin() + static_cast<std::ptrdiff_t>(l));
      mid = l;
    }
    return mid;
  }

  void make_leaf(int node, const typename Criterion::Stats& stats, std::size_t begin,
                 std::size_t end) {
    auto& n = nodes_[static_cast<std::size_t>(node)];
    n.value_offset = values_.size();
    crit_.leaf(stats, values_);
    for (std::size_t i = begin; i < end; ++i) row_leaf_[order_[0][i]] = node;
  }

  const Matrix& x_;
  const Criterion& crit_;
  const TreeParams& params_;
  TreeMode mode_;
  Rng rng_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<char> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<int> row_leaf_;
  std::vector<int> all_features_;
  std::vector<DecisionTree::Node> nodes_;
  std::vector<double> values_;
};

void check_inputs(const Matrix& x, std::size_t n, std::span<const double> weights,
                  const TreeParams& params) {
  if (x.rows() == 0) throw PreconditionError("cannot train a tree on empty data");
  if (x.cols() == 0) throw PreconditionError("cannot train a tree without features");
  if (n != x.rows()) throw PreconditionError("targets and feature rows differ in length");
  if (weights.size() != x.rows()) throw PreconditionError("weights and feature rows differ in length");
  if (params.min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
}

std::vector<double> unit_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

}  // namespace

TreeFit fit_classification_tree(const Matrix& x, const SortedColumns& sorted,
                                std::span<const int> y, std::span<const double> weights,
                                const TreeParams& params) {
  check_inputs(x, y.size(), weights, params);
  if (params.num_classes < 2) throw ConfigError("num_classes must be at least 2");
  for (int label : y) {
    if (label < 0 || label >= params.num_classes) {
      throw PreconditionError("label " + std::to_string(label) + " outside [0, num_classes)");
    }
  }
  const GiniCriterion crit(y, weights, params.num_classes);
  return TreeBuilder(x, sorted, weights, crit, params, TreeMode::GiniClassification).build();
}

TreeFit fit_regression_tree(const Matrix& x, const SortedColumns& sorted,
                            std::span<const double> target, std::span<const double> weights,
                            const TreeParams& params) {
  check_inputs(x, target.size(), weights, params);
  const SquaredErrorCriterion crit(target, weights);
  return TreeBuilder(x, sorted, weights, crit, params, TreeMode::SquaredErrorRegression).build();
}

TreeFit fit_second_order_tree(const Matrix& x, const SortedColumns& sorted,
                              std::span<const double> grad, std::span<const double> hess,
                              std::span<const double> weights, const TreeParams& params) {
  check_inputs(x, grad.size(), weights, params);
  if (hess.size() != grad.size()) throw PreconditionError("gradient and hessian lengths differ");
  if (params.lambda < 0.0 || params.gamma < 0.0) {
    throw ConfigError("lambda and gamma must be non-negative");
  }
  const SecondOrderCriterion crit(grad, hess, weights, params.lambda, params.gamma);
  return TreeBuilder(x, sorted, weights, crit, params, TreeMode::SecondOrder).build();
}

DecisionTree train_tree(const Matrix& x, std::span<const int> y, const TreeParams& params) {
  const SortedColumns sorted(x);
  const auto w = unit_weights(x.rows());
  return fit_classification_tree(x, sorted, y, w, params).tree;
}

DecisionTree train_regression_tree(const Matrix& x, std::span<const double> target,
                                   const TreeParams& params) {
  const SortedColumns sorted(x);
  const auto w = unit_weights(x.rows());
  return fit_regression_tree(x, sorted, target, w, params).tree;
}

DecisionTree train_second_order_tree(const Matrix& x, std::span<const double> grad,
                                     std::span<const double> hess, const TreeParams& params) {
  const SortedColumns sorted(x);
  const auto w = unit_weights(x.rows());
  return fit_second_order_tree(x, sorted, grad, hess, w, params).tree;
}

}  // namespace gradepred
