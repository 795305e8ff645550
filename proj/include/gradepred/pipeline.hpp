#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "gradepred/embed.hpp"
#include "gradepred/error.hpp"
#include "gradepred/ensemble.hpp"
#include "gradepred/eval.hpp"
#include "gradepred/features.hpp"
#include "gradepred/synthetic.hpp"

namespace gradepred {

enum class ModelKind { RandomForest, GradientBoosting, SecondOrderBoosting };
enum class GraphSource { All, TrainOnly };

std::string to_string(ModelKind kind);  // rf | gb | xgb
std::string to_string(GraphSource source);  // all | train_only
ModelKind parse_model_kind(const std::string& name);
GraphSource parse_graph_source(const std::string& name);

/// Everything one end-to-end run needs. Exactly one of `input` and `synth`
/// is set.
struct RunConfig {
  std::optional<std::filesystem::path> input;
  std::optional<SynthConfig> synth;

  double train_ratio = 0.8;
  int min_interactions = 2;
  // "all" builds the graph from every record; test interactions then leak
  // into degree, centrality and embeddings. "train_only" uses the train half
  // and backfills unseen nodes.
  GraphSource graph_source = GraphSource::All;

  int num_walks = 100;
  int walk_length = 10;
  double p = 1.0;
  double q = 1.0;
  SkipGramConfig skipgram;

  ModelKind model = ModelKind::GradientBoosting;
  FeatureVariant variant = BaselineFeatures{};
  ForestParams forest;
  BoostingParams boosting = BoostingParams::gradient_boosting_defaults();

  std::uint64_t seed = 42;
  int threads = 1;
  std::filesystem::path output_dir = "run";
  bool svg = false;
};

/// Generator parameters from a JSON object; unknown keys raise ConfigError.
SynthConfig synth_config_from_json(const nlohmann::json& doc);
nlohmann::json synth_config_to_json(const SynthConfig& config);

/// Reads a config document. Unknown keys, wrong types and a missing or
/// doubled input source raise ConfigError. Model parameter defaults follow the
/// chosen model.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& config);

/// Error raised by a pipeline stage; what() starts with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunResult {
  Model model;
  nlohmann::json report;
  ClassificationReport metrics;
};

/// ingest/synthesize -> filter -> split -> graph -> embed -> assemble -> train
/// -> evaluate. Progress lines go to `log`. Stage failures are rethrown as
/// StageError, except ConfigError which passes through.
RunResult run_pipeline(const RunConfig& config, std::ostream& log);

/// Writes model.json, report.json, run_config.json, roc_class{0..4}.csv,
/// importance.csv and, if requested, roc.svg and importance.svg.
void write_run_outputs(const RunConfig& config, const RunResult& result);

}  // namespace gradepred
