#include "gradepred/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gradepred/data.hpp"
#include "gradepred/embed.hpp"
#include "gradepred/error.hpp"
#include "gradepred/graph.hpp"
#include "gradepred/pipeline.hpp"
#include "gradepred/report.hpp"
#include "gradepred/synthetic.hpp"

namespace gradepred::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Problems with the invocation itself: missing files, bad flag values.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path);
}

struct SynthArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  json doc = read_json(a.config);
  std::uint64_t seed = 42;
  if (doc.is_object() && doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    seed = doc["seed"].get<std::uint64_t>();
    doc.erase("seed");
  }
  if (a.seed) seed = *a.seed;
  const SynthConfig config = synth_config_from_json(doc);
  const Dataset data = generate_synthetic(config, seed);
  write_file(a.out, serialize_interactions(data));
  out << "wrote " << data.size() << " records to " << a.out << '\n';
  return kExitOk;
}

struct IngestArgs {
  std::string input;
  std::string out;
  int min_interactions = 1;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  if (a.min_interactions < 1) throw UsageError("--min-interactions must be >= 1");
  Dataset data = parse_interactions(read_file(a.input));
  const std::size_t parsed = data.size();
  data = filter_min_interactions(data, a.min_interactions);
  write_file(a.out, serialize_interactions(data));
  out << "records " << parsed << ", kept " << data.size() << ", students "
      << data.student_index().size() << ", challenges " << data.challenge_index().size() << '\n';
  return kExitOk;
}

int cmd_graph_stats(const std::string& data_path, std::ostream& out) {
  const Dataset data = parse_interactions(read_file(data_path));
  const auto stats = graph_stats(build_bipartite(data));
  out << graph_stats_json(stats).dump(2) << '\n';
  return kExitOk;
}

struct EmbedArgs {
  std::string data;
  std::string method = "deepwalk";
  std::string out;
  int dim = 128;
  int walks = 100;
  int length = 10;
  int window = 10;
  double p = 1.0;
  double q = 1.0;
  int epochs = 5;
  int negatives = 5;
  double lr = 0.025;
  std::uint64_t seed = 1;
  int threads = 1;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out) {
  WalkConfig walk;
  if (a.method == "node2vec") {
    walk.strategy = BiasedWalk{a.p, a.q};
  } else if (a.method != "deepwalk") {
    throw UsageError("unknown method '" + a.method + "' (expected deepwalk or node2vec)");
  }
  walk.num_walks_per_node = a.walks;
  walk.walk_length = a.length;
  walk.seed = a.seed;
  walk.threads = a.threads;
  SkipGramConfig sg;
  sg.dimension = a.dim;
  sg.window = a.window;
  sg.negatives_per_positive = a.negatives;
  sg.epochs = a.epochs;
  sg.initial_learning_rate = a.lr;
  sg.seed = a.seed;
  sg.threads = a.threads;
  try {
    validate(walk);
    validate(sg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const Dataset data = parse_interactions(read_file(a.data));
  const EmbeddingTable table = embed_graph(build_bipartite(data), walk, sg);
  std::ostringstream csv;
  write_embeddings_csv(csv, table);
  write_file(a.out, csv.str());
  out << "wrote " << table.size() << " vectors of dimension " << table.dimension() << " to "
      << a.out << '\n';
  return kExitOk;
}

// Flags given on the command line override the config document.
struct RunArgs {
  std::string config;
  std::optional<std::string> input;
  std::optional<std::string> output_dir;
  std::optional<std::string> model;
  std::optional<std::string> variant;
  std::optional<std::string> graph_source;
  std::optional<double> train_ratio;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> dim;
  std::optional<int> walks;
  std::optional<int> length;
  std::optional<int> window;
  std::optional<double> p;
  std::optional<double> q;
  std::optional<int> epochs;
  std::optional<int> negatives;
  std::optional<double> lr;
  bool svg = false;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  json doc = read_json(a.config);
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (a.input) {
    doc.erase("synth");
    doc["input"] = *a.input;
  }
  auto set = [&](const char* key, const auto& value) {
    if (value) doc[key] = *value;
  };
  auto set_nested = [&](const char* section, const char* key, const auto& value) {
    if (!value) return;
    if (!doc.contains(section)) doc[section] = json::object();
    doc[section][key] = *value;
  };
  set("output_dir", a.output_dir);
  set("model", a.model);
  set("variant", a.variant);
  set("graph_source", a.graph_source);
  set("train_ratio", a.train_ratio);
  set("seed", a.seed);
  set("threads", a.threads);
  set_nested("skipgram", "dimension", a.dim);
  set_nested("walk", "num_walks", a.walks);
  set_nested("walk", "walk_length", a.length);
  set_nested("skipgram", "window", a.window);
  set_nested("walk", "p", a.p);
  set_nested("walk", "q", a.q);
  set_nested("skipgram", "epochs", a.epochs);
  set_nested("skipgram", "negatives", a.negatives);
  set_nested("skipgram", "learning_rate", a.lr);
  if (a.svg) doc["svg"] = true;

  const RunConfig config = run_config_from_json(doc);
  if (config.input && !fs::is_regular_file(*config.input)) {
    throw UsageError("no such file: " + config.input->string());
  }
  const RunResult result = run_pipeline(config, err);
  write_run_outputs(config, result);
  out << metrics_row(result.report);
  return kExitOk;
}

struct ReportArgs {
  std::string report;
  std::optional<std::string> out_dir;
  bool svg = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const json report = read_json(a.report);
  const fs::path dir = a.out_dir ? fs::path(*a.out_dir) : fs::path(a.report).parent_path();
  render_report_outputs(report, dir.empty() ? fs::path(".") : dir, a.svg);
  out << metrics_row(report);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grade prediction from interaction records and student-challenge graph structure",
               "gradepred"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a block-structured synthetic dataset");
  synth_cmd->add_option("--config", synth.config, "Generator config (JSON)")->required();
  synth_cmd->add_option("--out", synth.out, "Output CSV")->required();
  synth_cmd->add_option("--seed", synth.seed, "Seed (overrides the config)");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and normalize an interaction CSV");
  ingest_cmd->add_option("--input", ingest.input, "Raw CSV")->required();
  ingest_cmd->add_option("--out", ingest.out, "Normalized CSV")->required();
  ingest_cmd->add_option("--min-interactions", ingest.min_interactions,
                         "Drop students with fewer distinct challenges")
      ->capture_default_str();

  std::string stats_path;
  auto* stats_cmd = app.add_subcommand("graph-stats", "Print interaction graph statistics as JSON");
  stats_cmd->add_option("data", stats_path, "Interaction CSV")->required();

  EmbedArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "Train node embeddings with random walks");
  embed_cmd->add_option("--data", embed.data, "Interaction CSV")->required();
  embed_cmd->add_option("--method", embed.method, "deepwalk or node2vec")->capture_default_str();
  embed_cmd->add_option("--out", embed.out, "Embedding CSV")->required();
  embed_cmd->add_option("--dim", embed.dim)->capture_default_str();
  embed_cmd->add_option("--walks", embed.walks, "Walks per node")->capture_default_str();
  embed_cmd->add_option("--length", embed.length, "Walk length")->capture_default_str();
  embed_cmd->add_option("--window", embed.window)->capture_default_str();
  embed_cmd->add_option("--p", embed.p, "Return parameter (node2vec)")->capture_default_str();
  embed_cmd->add_option("--q", embed.q, "In-out parameter (node2vec)")->capture_default_str();
  embed_cmd->add_option("--epochs", embed.epochs)->capture_default_str();
  embed_cmd->add_option("--negatives", embed.negatives)->capture_default_str();
  embed_cmd->add_option("--lr", embed.lr)->capture_default_str();
  embed_cmd->add_option("--seed", embed.seed)->capture_default_str();
  embed_cmd->add_option("--threads", embed.threads)->capture_default_str();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from a JSON config");
  run_cmd->add_option("--config", run_args.config, "Run config (JSON)")->required();
  run_cmd->add_option("--input", run_args.input, "Interaction CSV (replaces synth)");
  run_cmd->add_option("--output-dir", run_args.output_dir);
  run_cmd->add_option("--model", run_args.model, "rf, gb or xgb");
  run_cmd->add_option("--variant", run_args.variant, "baseline, deepwalk or node2vec");
  run_cmd->add_option("--graph-source", run_args.graph_source, "all or train_only");
  run_cmd->add_option("--train-ratio", run_args.train_ratio);
  run_cmd->add_option("--seed", run_args.seed);
  run_cmd->add_option("--threads", run_args.threads);
  run_cmd->add_option("--dim", run_args.dim);
  run_cmd->add_option("--walks", run_args.walks);
  run_cmd->add_option("--length", run_args.length);
  run_cmd->add_option("--window", run_args.window);
  run_cmd->add_option("--p", run_args.p);
  run_cmd->add_option("--q", run_args.q);
  run_cmd->add_option("--epochs", run_args.epochs);
  run_cmd->add_option("--negatives", run_args.negatives);
  run_cmd->add_option("--lr", run_args.lr);
  run_cmd->add_flag("--svg", run_args.svg, "Also write SVG plots");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Re-render CSV/SVG outputs from report.json");
  report_cmd->add_option("report", report.report, "report.json")->required();
  report_cmd->add_option("--out", report.out_dir, "Output directory (default: beside the report)");
  report_cmd->add_flag("--svg", report.svg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth, out);
    if (ingest_cmd->parsed()) return cmd_ingest(ingest, out);
    if (stats_cmd->parsed()) return cmd_graph_stats(stats_path, out);
    if (embed_cmd->parsed()) return cmd_embed(embed, out);
    if (run_cmd->parsed()) return cmd_run(run_args, out, err);
    if (report_cmd->parsed()) return cmd_report(report, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace gradepred::cli
