#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "gradepred/cli.hpp"
#include "gradepred/error.hpp"
#include "gradepred/pipeline.hpp"
#include "gradepred/report.hpp"
#include "oracles.hpp"

using namespace gradepred;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Small synthetic cohort so that a full pipeline run takes well under a second.
nlohmann::json small_run_config(const fs::path& out_dir) {
  return {{"synth",
           {{"students", 80}, {"challenges", 40}, {"cohorts", 4}, {"courses_per_cohort", 2}}},
          {"model", "gb"},
          {"variant", "baseline"},
          {"model_params", {{"num_stages", 8}}},
          {"walk", {{"num_walks", 4}, {"walk_length", 6}}},
          {"skipgram", {{"dimension", 8}, {"window", 3}, {"epochs", 1}}},
          {"seed", 9},
          {"output_dir", out_dir.string()}};
}

}  // namespace

TEST_CASE("run config: defaults, round-trip and validation") {
  const auto c = run_config_from_json({{"synth", nlohmann::json::object()}});
  CHECK(c.synth.has_value());
  CHECK_FALSE(c.input.has_value());
  CHECK(c.train_ratio == 0.8);
  CHECK(c.min_interactions == 2);
  CHECK(c.graph_source == GraphSource::All);
  CHECK(c.num_walks == 100);
  CHECK(c.walk_length == 10);
  CHECK(c.skipgram.dimension == 128);
  CHECK(c.model == ModelKind::GradientBoosting);
  CHECK(c.seed == 42);
  CHECK(c.threads == 1);

  const auto xgb = run_config_from_json({{"input", "x.csv"}, {"model", "xgb"}});
  CHECK(xgb.boosting == BoostingParams::second_order_defaults());

  auto doc = small_run_config("out");
  doc["variant"] = "node2vec";
  doc["walk"]["p"] = 0.5;
  doc["graph_source"] = "train_only";
  const auto parsed = run_config_from_json(doc);
  CHECK(parsed.p == 0.5);
  CHECK(parsed.boosting.num_stages == 8);
  CHECK(run_config_to_json(run_config_from_json(run_config_to_json(parsed))) ==
        run_config_to_json(parsed));

  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::object()), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"input", "a"}, {"synth", nlohmann::json::object()}}),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"input", "a"}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"input", "a"}, {"model", "svm"}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"input", "a"}, {"train_ratio", "high"}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"synth", {{"students", -1}}}}), ConfigError);
}

TEST_CASE("pipeline report structure and consistency") {
  const auto dir = fixtures::scratch_dir("pipeline");
  auto config = run_config_from_json(small_run_config(dir));
  std::ostringstream log;
  const auto result = run_pipeline(config, log);
  const auto& r = result.report;
  CHECK(r.at("schema") == kReportSchema);
  for (const char* key : {"run", "data", "graph", "features", "confusion", "report", "roc",
                          "categories", "importances"}) {
    CHECK(r.contains(key));
  }
  const auto& data = r.at("data");
  CHECK(data.at("train_records").get<int>() + data.at("test_records").get<int>() ==
        data.at("records").get<int>());
  int confusion_total = 0;
  for (const auto& row : r.at("confusion")) {
    for (const auto& v : row) confusion_total += v.get<int>();
  }
  CHECK(confusion_total == data.at("test_records").get<int>());
  CHECK(r.at("roc").size() == 5);
  CHECK(r.at("report").at("accuracy").get<double>() == doctest::Approx(result.metrics.accuracy));
  double flat = 0.0;
  for (const auto& [name, v] : r.at("importances").at("flat").items()) flat += v.get<double>();
  CHECK(flat == doctest::Approx(1.0));
  CHECK(log.str().find("train:") != std::string::npos);

  write_run_outputs(config, result);
  for (const char* f : {"model.json", "report.json", "run_config.json", "roc_class0.csv",
                        "roc_class4.csv", "importance.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(slurp(dir / "importance.csv").rfind("view,feature,importance\n", 0) == 0);
}

TEST_CASE("pipeline stage failures name the stage") {
  const auto dir = fixtures::scratch_dir("stage_error");
  RunConfig config;
  config.input = dir / "missing.csv";
  std::ostringstream log;
  try {
    run_pipeline(config, log);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
  }
}

TEST_CASE("structural pipeline with train-only graph") {
  const auto dir = fixtures::scratch_dir("train_only");
  auto doc = small_run_config(dir);
  doc["variant"] = "deepwalk";
  doc["graph_source"] = "train_only";
  doc["model"] = "rf";
  doc["model_params"] = {{"num_trees", 5}, {"features_per_split", "sqrt"}};
  std::ostringstream log;
  const auto result = run_pipeline(run_config_from_json(doc), log);
  CHECK(result.report.at("run").at("graph_source") == "train_only");
  CHECK(result.report.at("features").size() == 6 + 4 + 2 * 8);
}

TEST_CASE("report rendering from a document") {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<bool> pos{true, false};
  const auto roc = roc_json(roc_curve(s, oracles::Flags(pos)));
  CHECK(roc.at("defined") == true);
  CHECK(roc.at("auc") == 1.0);
  CHECK(roc_csv(3, roc) == "class,fpr,tpr\n3,0.0,0.0\n3,0.0,1.0\n3,1.0,1.0\n");
  CHECK_FALSE(roc_svg(nlohmann::json::array({roc})).empty());

  const nlohmann::json report = {
      {"report", {{"accuracy", 0.5}, {"macro_avg", {{"precision", 0.25}, {"recall", 0.125}, {"f1", 1.0 / 6}}}}}};
  CHECK(metrics_row(report) == "accuracy precision recall f1\n0.50 0.25 0.12 0.17\n");
  CHECK_THROWS_AS(render_report_outputs(nlohmann::json::object(), fixtures::scratch_dir("bad"), false),
                  DataError);
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
  CHECK(invoke({"graph-stats", "/nonexistent/data.csv"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("cli: synth is deterministic and validates its config") {
  const auto dir = fixtures::scratch_dir("cli_synth");
  write_file(dir / "cfg.json", R"({"students": 30, "challenges": 20, "cohorts": 2})");
  const auto a = invoke({"synth", "--config", (dir / "cfg.json").string(), "--out",
                         (dir / "a.csv").string(), "--seed", "5"});
  CHECK(a.code == cli::kExitOk);
  CHECK(invoke({"synth", "--config", (dir / "cfg.json").string(), "--out",
                (dir / "b.csv").string(), "--seed", "5"})
            .code == cli::kExitOk);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK_FALSE(slurp(dir / "a.csv").empty());

  write_file(dir / "bad.json", R"({"students": -3})");
  CHECK(invoke({"synth", "--config", (dir / "bad.json").string(), "--out",
                (dir / "c.csv").string()})
            .code == cli::kExitUsage);
}

TEST_CASE("cli: ingest, graph-stats and embed") {
  const auto dir = fixtures::scratch_dir("cli_data");
  write_file(dir / "one.csv",
             "user_id,challenge_id,timestamp,final_score,exercise_id,course_id,difficulty,retries,"
             "duration\n7,3,100,55,1,1,2,0,12.5\n");
  const auto stats = invoke({"graph-stats", (dir / "one.csv").string()});
  REQUIRE(stats.code == cli::kExitOk);
  const auto doc = nlohmann::json::parse(stats.out);
  CHECK(doc.at("students") == 1);
  CHECK(doc.at("challenges") == 1);
  CHECK(doc.at("edges") == 1);
  CHECK(doc.at("density") == 1.0);

  const auto ingest = invoke({"ingest", "--input", (dir / "one.csv").string(), "--out",
                              (dir / "norm.csv").string()});
  CHECK(ingest.code == cli::kExitOk);
  CHECK(slurp(dir / "norm.csv") == slurp(dir / "one.csv"));

  write_file(dir / "bad.csv", "user_id,challenge_id\n1,2\n");
  CHECK(invoke({"graph-stats", (dir / "bad.csv").string()}).code == cli::kExitRuntime);

  const auto embed = invoke({"embed", "--data", (dir / "one.csv").string(), "--out",
                             (dir / "emb.csv").string(), "--dim", "4", "--walks", "2", "--epochs",
                             "1", "--method", "node2vec", "--p", "2"});
  CHECK(embed.code == cli::kExitOk);
  CHECK(read_embeddings_csv(slurp(dir / "emb.csv")).size() == 2);
  CHECK(invoke({"embed", "--data", (dir / "one.csv").string(), "--out",
                (dir / "emb.csv").string(), "--method", "line"})
            .code == cli::kExitUsage);
}

TEST_CASE("cli: run is reproducible and report re-renders its outputs") {
  const auto dir = fixtures::scratch_dir("cli_run");
  write_file(dir / "run.json", small_run_config(dir / "a").dump());
  const auto a = invoke({"run", "--config", (dir / "run.json").string(), "--variant", "node2vec"});
  REQUIRE(a.code == cli::kExitOk);
  CHECK(a.out.rfind("accuracy precision recall f1\n", 0) == 0);
  const auto b = invoke({"run", "--config", (dir / "run.json").string(), "--variant", "node2vec",
                         "--output-dir", (dir / "b").string(), "--threads", "1"});
  REQUIRE(b.code == cli::kExitOk);
  CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
  CHECK(slurp(dir / "a" / "model.json") == slurp(dir / "b" / "model.json"));

  const auto saved = nlohmann::json::parse(slurp(dir / "a" / "run_config.json"));
  CHECK(saved.at("variant") == "node2vec");

  fs::remove(dir / "a" / "roc_class0.csv");
  const auto r = invoke({"report", (dir / "a" / "report.json").string(), "--svg"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out == a.out);
  CHECK(fs::exists(dir / "a" / "roc_class0.csv"));
  CHECK(fs::exists(dir / "a" / "roc.svg"));
  CHECK(fs::exists(dir / "a" / "importance.svg"));

  CHECK(invoke({"run", "--config", (dir / "run.json").string(), "--model", "svm"}).code ==
        cli::kExitUsage);
  CHECK(invoke({"report", (dir / "missing.json").string()}).code == cli::kExitUsage);
}
