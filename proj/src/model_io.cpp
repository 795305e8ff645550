#include "gradepred/model_io.hpp"

#include "gradepred/error.hpp"

namespace gradepred {

using nlohmann::json;

namespace {

const char* mode_name(TreeMode mode) {
  switch (mode) {
    case TreeMode::GiniClassification:
      return "gini";
    case TreeMode::SquaredErrorRegression:
      return "squared_error";
    case TreeMode::SecondOrder:
      return "second_order";
  }
  return "gini";
}

TreeMode parse_mode(const std::string& name) {
  if (name == "gini") return TreeMode::GiniClassification;
  if (name == "squared_error") return TreeMode::SquaredErrorRegression;
  if (name == "second_order") return TreeMode::SecondOrder;
  throw DataError("unknown tree mode '" + name + "'");
}

json tree_to_json(const DecisionTree& tree) {
  json feature = json::array();
  json threshold = json::array();
  json left = json::array();
  json right = json::array();
  json gain = json::array();
  json samples = json::array();
  json offset = json::array();
  for (const auto& n : tree.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    gain.push_back(n.gain);
    samples.push_back(n.samples);
    offset.push_back(n.value_offset);
  }
  return {{"mode", mode_name(tree.mode())},
          {"num_features", tree.num_features()},
          {"value_width", tree.value_width()},
          {"feature", feature},
          {"threshold", threshold},
          {"left", left},
          {"right", right},
          {"gain", gain},
          {"samples", samples},
          {"value_offset", offset},
          {"values", tree.values()}};
}

DecisionTree tree_from_json(const json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto gain = j.at("gain").get<std::vector<double>>();
  const auto samples = j.at("samples").get<std::vector<double>>();
  const auto offset = j.at("value_offset").get<std::vector<std::size_t>>();
  const std::size_t count = feature.size();
  if (threshold.size() != count || left.size() != count || right.size() != count ||
      gain.size() != count || samples.size() != count || offset.size() != count) {
    throw DataError("tree arrays differ in length");
  }
  std::vector<DecisionTree::Node> nodes(count);
  for (std::size_t i = 0; i < count; ++i) {
    nodes[i] = {feature[i], threshold[i], left[i], right[i], gain[i], samples[i], offset[i]};
  }
  return DecisionTree(parse_mode(j.at("mode").get<std::string>()),
                      j.at("num_features").get<std::size_t>(),
                      j.at("value_width").get<std::size_t>(), std::move(nodes),
                      j.at("values").get<std::vector<double>>());
}

}  // namespace

json model_to_json(const Model& model) {
  json doc;
  doc["version"] = kModelFormatVersion;
  if (const auto* forest = std::get_if<ForestModel>(&model)) {
    const auto& p = forest->params();
    doc["kind"] = "random_forest";
    doc["params"] = {{"num_trees", p.num_trees},
                     {"bootstrap", p.bootstrap},
                     {"features_per_split",
                      p.features_per_split ? json(*p.features_per_split) : json(nullptr)},
                     {"max_depth", p.max_depth},
                     {"min_samples_leaf", p.min_samples_leaf},
                     {"seed", p.seed},
                     {"num_classes", p.num_classes},
                     {"threads", p.threads}};
    doc["num_features"] = forest->num_features();
    json trees = json::array();
    for (const auto& t : forest->trees()) trees.push_back(tree_to_json(t));
    doc["trees"] = std::move(trees);
    return doc;
  }
  const auto& boosted = std::get<BoostedModel>(model);
  const auto& p = boosted.params();
  doc["kind"] = "boosting";
  doc["variant"] = boosted.variant() == BoostingVariant::FirstOrder ? "first_order" : "second_order";
  doc["params"] = {{"num_stages", p.num_stages},
                   {"learning_rate", p.learning_rate},
                   {"max_depth", p.max_depth},
                   {"min_samples_leaf", p.min_samples_leaf},
                   {"lambda", p.lambda},
                   {"gamma", p.gamma},
                   {"num_classes", p.num_classes},
                   {"threads", p.threads}};
  doc["num_features"] = boosted.num_features();
  doc["base_scores"] = boosted.base_scores();
  json stages = json::array();
  for (const auto& stage : boosted.stages()) {
    json trees = json::array();
    for (const auto& t : stage) trees.push_back(tree_to_json(t));
    stages.push_back(std::move(trees));
  }
  doc["stages"] = std::move(stages);
  return doc;
}

Model model_from_json(const json& doc) {
  try {
    if (doc.at("version").get<std::string>() != kModelFormatVersion) {
      throw DataError("unsupported model version '" + doc.at("version").get<std::string>() + "'");
    }
    const auto kind = doc.at("kind").get<std::string>();
    const auto& jp = doc.at("params");
    if (kind == "random_forest") {
      ForestParams p;
      p.num_trees = jp.at("num_trees").get<int>();
      p.bootstrap = jp.at("bootstrap").get<bool>();
      if (!jp.at("features_per_split").is_null()) {
        p.features_per_split = jp.at("features_per_split").get<int>();
      }
      p.max_depth = jp.at("max_depth").get<int>();
      p.min_samples_leaf = jp.at("min_samples_leaf").get<int>();
      p.seed = jp.at("seed").get<std::uint64_t>();
      p.num_classes = jp.at("num_classes").get<int>();
      p.threads = jp.at("threads").get<int>();
      std::vector<DecisionTree> trees;
      for (const auto& t : doc.at("trees")) trees.push_back(tree_from_json(t));
      return ForestModel(p, doc.at("num_features").get<std::size_t>(), std::move(trees));
    }
    if (kind == "boosting") {
      BoostingParams p;
      p.num_stages = jp.at("num_stages").get<int>();
      p.learning_rate = jp.at("learning_rate").get<double>();
      p.max_depth = jp.at("max_depth").get<int>();
      p.min_samples_leaf = jp.at("min_samples_leaf").get<int>();
      p.lambda = jp.at("lambda").get<double>();
      p.gamma = jp.at("gamma").get<double>();
      p.num_classes = jp.at("num_classes").get<int>();
      p.threads = jp.at("threads").get<int>();
      const auto variant = doc.at("variant").get<std::string>();
      if (variant != "first_order" && variant != "second_order") {
        throw DataError("unknown boosting variant '" + variant + "'");
      }
      std::vector<std::vector<DecisionTree>> stages;
      for (const auto& stage : doc.at("stages")) {
        std::vector<DecisionTree> trees;
        for (const auto& t : stage) trees.push_back(tree_from_json(t));
        stages.push_back(std::move(trees));
      }
      return BoostedModel(
          variant == "first_order" ? BoostingVariant::FirstOrder : BoostingVariant::SecondOrder, p,
          doc.at("num_features").get<std::size_t>(),
          doc.at("base_scores").get<std::vector<double>>(), std::move(stages));
    }
    throw DataError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  } catch (const PreconditionError& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace gradepred
