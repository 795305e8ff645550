#include "gradepred/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

#include "gradepred/error.hpp"
#include "gradepred/graph.hpp"
#include "gradepred/model_io.hpp"
#include "gradepred/report.hpp"
#include "gradepred/rng.hpp"

namespace gradepred {

using nlohmann::json;

namespace {

// Independent seed streams derived from the run seed.
enum Stream : std::uint64_t { kSynthStream = 1, kWalkStream, kSkipGramStream, kModelStream };

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

}  // namespace

SynthConfig synth_config_from_json(const json& s) {
  check_keys(s, "synth",
             {"students", "challenges", "cohorts", "courses_per_cohort", "exercises_per_course",
              "in_cohort_probability", "noise_sigma", "cohort_spread", "mean_interactions",
              "min_interactions", "max_interactions", "engagement", "start_time"});
  SynthConfig c;
  read(s, "students", c.students);
  read(s, "challenges", c.challenges);
  read(s, "cohorts", c.cohorts);
  read(s, "courses_per_cohort", c.courses_per_cohort);
  read(s, "exercises_per_course", c.exercises_per_course);
  read(s, "in_cohort_probability", c.in_cohort_probability);
  read(s, "noise_sigma", c.noise_sigma);
  read(s, "cohort_spread", c.cohort_spread);
  read(s, "mean_interactions", c.mean_interactions);
  read(s, "min_interactions", c.min_interactions);
  read(s, "max_interactions", c.max_interactions);
  read(s, "engagement", c.engagement);
  read(s, "start_time", c.start_time);
  validate(c);
  return c;
}

json synth_config_to_json(const SynthConfig& c) {
  return {{"students", c.students},
          {"challenges", c.challenges},
          {"cohorts", c.cohorts},
          {"courses_per_cohort", c.courses_per_cohort},
          {"exercises_per_course", c.exercises_per_course},
          {"in_cohort_probability", c.in_cohort_probability},
          {"noise_sigma", c.noise_sigma},
          {"cohort_spread", c.cohort_spread},
          {"mean_interactions", c.mean_interactions},
          {"min_interactions", c.min_interactions},
          {"max_interactions", c.max_interactions},
          {"engagement", c.engagement},
          {"start_time", c.start_time}};
}

namespace {

void forest_params_from_json(const json& m, ForestParams& f) {
  check_keys(m, "model_params",
             {"num_trees", "bootstrap", "features_per_split", "max_depth", "min_samples_leaf"});
  read(m, "num_trees", f.num_trees);
  read(m, "bootstrap", f.bootstrap);
  read(m, "max_depth", f.max_depth);
  read(m, "min_samples_leaf", f.min_samples_leaf);
  if (m.contains("features_per_split")) {
    const auto& v = m.at("features_per_split");
    if (v.is_string() && v.get<std::string>() == "sqrt") {
      f.features_per_split.reset();
    } else if (v.is_number_integer() && v.get<int>() > 0) {
      f.features_per_split = v.get<int>();
    } else {
      throw ConfigError("features_per_split must be \"sqrt\" or a positive integer");
    }
  }
  if (f.num_trees <= 0) throw ConfigError("num_trees must be positive");
  if (f.min_samples_leaf <= 0) throw ConfigError("min_samples_leaf must be positive");
}

void boosting_params_from_json(const json& m, BoostingParams& b) {
  check_keys(m, "model_params",
             {"num_stages", "learning_rate", "max_depth", "min_samples_leaf", "lambda", "gamma"});
  read(m, "num_stages", b.num_stages);
  read(m, "learning_rate", b.learning_rate);
  read(m, "max_depth", b.max_depth);
  read(m, "min_samples_leaf", b.min_samples_leaf);
  read(m, "lambda", b.lambda);
  read(m, "gamma", b.gamma);
  if (b.num_stages <= 0) throw ConfigError("num_stages must be positive");
  if (b.learning_rate < 0) throw ConfigError("learning_rate must be non-negative");
  if (b.lambda < 0 || b.gamma < 0) throw ConfigError("lambda and gamma must be non-negative");
  if (b.min_samples_leaf <= 0) throw ConfigError("min_samples_leaf must be positive");
}

json model_params_to_json(const RunConfig& c) {
  if (c.model == ModelKind::RandomForest) {
    json fps = c.forest.features_per_split ? json(*c.forest.features_per_split) : json("sqrt");
    return {{"num_trees", c.forest.num_trees},
            {"bootstrap", c.forest.bootstrap},
            {"features_per_split", fps},
            {"max_depth", c.forest.max_depth},
            {"min_samples_leaf", c.forest.min_samples_leaf}};
  }
  return {{"num_stages", c.boosting.num_stages},
          {"learning_rate", c.boosting.learning_rate},
          {"max_depth", c.boosting.max_depth},
          {"min_samples_leaf", c.boosting.min_samples_leaf},
          {"lambda", c.boosting.lambda},
          {"gamma", c.boosting.gamma}};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::RandomForest: return "rf";
    case ModelKind::GradientBoosting: return "gb";
    case ModelKind::SecondOrderBoosting: return "xgb";
  }
  return "?";
}

std::string to_string(GraphSource source) {
  return source == GraphSource::All ? "all" : "train_only";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "rf") return ModelKind::RandomForest;
  if (name == "gb") return ModelKind::GradientBoosting;
  if (name == "xgb") return ModelKind::SecondOrderBoosting;
  throw ConfigError("unknown model '" + name + "' (expected rf, gb or xgb)");
}

GraphSource parse_graph_source(const std::string& name) {
  if (name == "all") return GraphSource::All;
  if (name == "train_only") return GraphSource::TrainOnly;
  throw ConfigError("unknown graph_source '" + name + "' (expected all or train_only)");
}

RunConfig run_config_from_json(const json& doc) {
  check_keys(doc, "config",
             {"input", "synth", "train_ratio", "min_interactions", "graph_source", "walk",
              "skipgram", "model", "variant", "model_params", "seed", "threads", "output_dir",
              "svg"});
  RunConfig c;
  if (doc.contains("input") == doc.contains("synth")) {
    throw ConfigError("exactly one of 'input' and 'synth' must be given");
  }
  if (doc.contains("input")) {
    std::string path;
    read(doc, "input", path);
    c.input = path;
  } else {
    c.synth = synth_config_from_json(doc.at("synth"));
  }
  read(doc, "train_ratio", c.train_ratio);
  read(doc, "min_interactions", c.min_interactions);
  if (!(c.train_ratio > 0 && c.train_ratio < 1)) throw ConfigError("train_ratio must be in (0, 1)");
  if (c.min_interactions < 1) throw ConfigError("min_interactions must be >= 1");
  if (doc.contains("graph_source")) {
    std::string s;
    read(doc, "graph_source", s);
    c.graph_source = parse_graph_source(s);
  }
  if (doc.contains("walk")) {
    const auto& w = doc.at("walk");
    check_keys(w, "walk", {"num_walks", "walk_length", "p", "q"});
    read(w, "num_walks", c.num_walks);
    read(w, "walk_length", c.walk_length);
    read(w, "p", c.p);
    read(w, "q", c.q);
  }
  if (doc.contains("skipgram")) {
    const auto& s = doc.at("skipgram");
    check_keys(s, "skipgram", {"dimension", "window", "negatives", "epochs", "learning_rate"});
    read(s, "dimension", c.skipgram.dimension);
    read(s, "window", c.skipgram.window);
    read(s, "negatives", c.skipgram.negatives_per_positive);
    read(s, "epochs", c.skipgram.epochs);
    read(s, "learning_rate", c.skipgram.initial_learning_rate);
  }
  if (doc.contains("model")) {
    std::string m;
    read(doc, "model", m);
    c.model = parse_model_kind(m);
  }
  if (c.model == ModelKind::SecondOrderBoosting) {
    c.boosting = BoostingParams::second_order_defaults();
  }
  if (doc.contains("variant")) {
    std::string v;
    read(doc, "variant", v);
    try {
      c.variant = parse_variant(v);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  if (doc.contains("model_params")) {
    if (c.model == ModelKind::RandomForest) {
      forest_params_from_json(doc.at("model_params"), c.forest);
    } else {
      boosting_params_from_json(doc.at("model_params"), c.boosting);
    }
  }
  read(doc, "seed", c.seed);
  read(doc, "threads", c.threads);
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (doc.contains("output_dir")) {
    std::string d;
    read(doc, "output_dir", d);
    c.output_dir = d;
  }
  read(doc, "svg", c.svg);

  if (c.num_walks <= 0 || c.walk_length <= 0) throw ConfigError("walk counts must be positive");
  if (!(c.p > 0) || !(c.q > 0)) throw ConfigError("p and q must be positive");
  try {
    validate(c.skipgram);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json doc;
  if (c.input) doc["input"] = c.input->string();
  if (c.synth) doc["synth"] = synth_config_to_json(*c.synth);
  doc["train_ratio"] = c.train_ratio;
  doc["min_interactions"] = c.min_interactions;
  doc["graph_source"] = to_string(c.graph_source);
  doc["walk"] = {{"num_walks", c.num_walks}, {"walk_length", c.walk_length}, {"p", c.p}, {"q", c.q}};
  doc["skipgram"] = {{"dimension", c.skipgram.dimension},
                     {"window", c.skipgram.window},
                     {"negatives", c.skipgram.negatives_per_positive},
                     {"epochs", c.skipgram.epochs},
                     {"learning_rate", c.skipgram.initial_learning_rate}};
  doc["model"] = to_string(c.model);
  doc["variant"] = variant_name(c.variant);
  doc["model_params"] = model_params_to_json(c);
  doc["seed"] = c.seed;
  doc["threads"] = c.threads;
  doc["output_dir"] = c.output_dir.string();
  doc["svg"] = c.svg;
  return doc;
}

RunResult run_pipeline(const RunConfig& config, std::ostream& log) {
  const Dataset raw = stage("ingest", [&] {
    if (config.input) return parse_interactions(read_text(*config.input));
    return generate_synthetic(*config.synth, derive_seed(config.seed, kSynthStream));
  });
  log << "ingest: " << raw.size() << " records\n";

  const Dataset data = stage("filter", [&] {
    auto d = filter_min_interactions(raw, config.min_interactions);
    if (d.empty()) throw DataError("no student meets the minimum interaction count");
    return d;
  });
  const SplitDataset split = stage("split", [&] { return temporal_split(data, config.train_ratio); });
  log << "split: " << split.train.size() << " train / " << split.test.size() << " test\n";

  const Dataset& graph_data = config.graph_source == GraphSource::All ? data : split.train;
  const BipartiteGraph graph = stage("graph", [&] { return build_bipartite(graph_data); });
  const GraphStats stats = graph_stats(graph);
  log << "graph: " << stats.nodes << " nodes, " << stats.edges << " edges\n";

  const auto* structural = std::get_if<StructuralFeatures>(&config.variant);
  std::optional<CentralityMap> centrality;
  std::optional<EmbeddingTable> embeddings;
  if (structural) {
    centrality = stage("centrality", [&] { return eigenvector_centrality(graph); });
    embeddings = stage("embed", [&] {
      WalkConfig walk;
      walk.num_walks_per_node = config.num_walks;
      walk.walk_length = config.walk_length;
      if (structural->source == EmbeddingSource::Node2vec) {
        walk.strategy = BiasedWalk{config.p, config.q};
      }
      walk.seed = derive_seed(config.seed, kWalkStream);
      walk.threads = config.threads;
      SkipGramConfig sg = config.skipgram;
      sg.seed = derive_seed(config.seed, kSkipGramStream);
      sg.threads = config.threads;
      return embed_graph(graph, walk, sg);
    });
    log << "embed: " << embeddings->size() << " vectors of dimension "
        << embeddings->dimension() << '\n';
  }

  StructuralSources sources;
  if (structural) {
    sources.graph = &graph;
    sources.centrality = &*centrality;
    sources.embeddings = &*embeddings;
    sources.missing = config.graph_source == GraphSource::All ? MissingNodePolicy::Strict
                                                              : MissingNodePolicy::MeanBackfill;
  }
  const FeatureMatrix train = stage("features", [&] { return assemble(split.train, config.variant, sources); });
  const FeatureMatrix test = stage("features", [&] { return assemble(split.test, config.variant, sources); });

  RunResult result;
  result.model = stage("train", [&]() -> Model {
    const Matrix x = train.to_matrix();
    const std::vector<int> y = train.labels();
    const std::uint64_t seed = derive_seed(config.seed, kModelStream);
    switch (config.model) {
      case ModelKind::RandomForest: {
        ForestParams p = config.forest;
        p.seed = seed;
        p.threads = config.threads;
        return train_random_forest(x, y, p);
      }
      case ModelKind::GradientBoosting: {
        BoostingParams p = config.boosting;
        p.threads = config.threads;
        return train_gradient_boosting(x, y, p);
      }
      case ModelKind::SecondOrderBoosting: {
        BoostingParams p = config.boosting;
        p.threads = config.threads;
        return train_second_order_boosting(x, y, p);
      }
    }
    throw ConfigError("unknown model kind");
  });
  log << "train: " << to_string(config.model) << " on " << train.examples.size() << " examples\n";

  stage("evaluate", [&] {
    std::vector<GradeClass> truth;
    std::vector<GradeClass> predicted;
    std::vector<std::vector<double>> probabilities;
    truth.reserve(test.examples.size());
    predicted.reserve(test.examples.size());
    probabilities.reserve(test.examples.size());
    for (const auto& ex : test.examples) {
      auto proba = predict_proba(result.model, ex.features);
      const auto best = std::max_element(proba.begin(), proba.end()) - proba.begin();
      truth.push_back(ex.label);
      predicted.emplace_back(static_cast<int>(best));
      probabilities.push_back(std::move(proba));
    }
    const ConfusionMatrix cm = confusion_matrix(truth, predicted);
    result.metrics = classification_report(cm);

    json roc = json::array();
    for (int c = 0; c < kNumGradeClasses; ++c) {
      const auto positives = static_cast<std::size_t>(cm.support(c));
      if (positives == 0 || positives == truth.size()) {
        roc.push_back({{"defined", false}, {"auc", nullptr}, {"points", json::array()}});
      } else {
        roc.push_back(roc_json(roc_ovr(probabilities, truth, GradeClass(c))));
      }
    }

    const auto flat = named_importance(feature_importance(result.model), train.feature_names);
    const auto counts = grade_class_counts(data);

    json& r = result.report;
    r["schema"] = kReportSchema;
    r["run"] = {{"model", to_string(config.model)},
                {"variant", variant_name(config.variant)},
                {"graph_source", to_string(config.graph_source)},
                {"seed", config.seed}};
    r["data"] = {{"records_ingested", raw.size()},
                 {"records", data.size()},
                 {"train_records", split.train.size()},
                 {"test_records", split.test.size()},
                 {"students", data.student_index().size()},
                 {"challenges", data.challenge_index().size()},
                 {"class_counts", counts}};
    r["graph"] = graph_stats_json(stats);
    r["graph"].erase("degree_histogram");
    if (centrality) r["graph"]["components"] = centrality->components;
    r["features"] = train.feature_names;
    r["confusion"] = confusion_json(cm);
    r["report"] = classification_report_json(result.metrics);
    r["roc"] = roc;
    r["categories"] = categories_json(per_category_report(split, predicted));
    r["importances"] = {{"flat", flat}, {"grouped", grouped_importance(flat)}};
    return 0;
  });
  return result;
}

void write_run_outputs(const RunConfig& config, const RunResult& result) {
  stage("write", [&] {
    const auto& dir = config.output_dir;
    std::filesystem::create_directories(dir);
    write_text(dir / "run_config.json", run_config_to_json(config).dump(2) + "\n");
    write_text(dir / "model.json", model_to_json(result.model).dump() + "\n");
    write_text(dir / "report.json", result.report.dump(2) + "\n");
    render_report_outputs(result.report, dir, config.svg);
    return 0;
  });
}

}  // namespace gradepred
