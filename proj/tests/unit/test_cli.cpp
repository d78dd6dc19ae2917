#include <doctest.h>

#include <filesystem>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "archattr/attribute_table.hpp"
#include "archattr/commands.hpp"

namespace fs = std::filesystem;
namespace cli = archattr::cli;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("archattr_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Shared population for the modeling commands.
const fs::path& population() {
  static TempDir dir("population");
  static bool made = [] {
    cli::GenOptions g;
    g.count = 600;
    g.seed = 11;
    g.output = dir.path;
    std::ostringstream log;
    REQUIRE(cli::cmd_gen(g, log) == cli::kExitOk);
    return true;
  }();
  (void)made;
  return dir.path;
}

cli::ClassifyOptions classify_options(const fs::path& out) {
  cli::ClassifyOptions o;
  o.input = population() / "dataset.csv";
  o.output = out;
  o.threshold = 0.77;
  o.seed = 5;
  o.model.trees = 15;
  return o;
}

}  // namespace

TEST_CASE("gen writes networks, both CSVs and a manifest") {
  const fs::path& dir = population();
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "networks")) files += e.is_regular_file();
  CHECK(files == 600);
  CHECK(archattr::load_attribute_csv(dir / "dataset.csv").has_accuracy());
  CHECK_FALSE(archattr::load_attribute_csv(dir / "attributes.csv").has_accuracy());
  const json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["schema_version"] == cli::kReportSchemaVersion);
  CHECK(m["generator"]["population"] == 600);
  CHECK(m["seeds"]["master"] == 11);
  for (const auto& s : m["plant"]["signals"]) {
    CHECK(s["mean"].is_number());
    CHECK(s["scale"].is_number());
  }
}

TEST_CASE("gen is deterministic and rejects invalid settings with exit 2") {
  TempDir t("gen");
  cli::GenOptions g;
  g.count = 50;
  g.output = t.path / "a";
  std::ostringstream log;
  REQUIRE(cli::cmd_gen(g, log) == cli::kExitOk);
  g.output = t.path / "b";
  g.threads = 1;
  REQUIRE(cli::cmd_gen(g, log) == cli::kExitOk);
  CHECK(slurp(t.path / "a" / "dataset.csv") == slurp(t.path / "b" / "dataset.csv"));
  CHECK(slurp(t.path / "a" / "networks" / "net_000049.prototxt") ==
        slurp(t.path / "b" / "networks" / "net_000049.prototxt"));

  write_text(t.path / "bad.ini", "population = 10\nconv_kernels = 3, 0\n");
  cli::GenOptions bad;
  bad.config = t.path / "bad.ini";
  bad.output = t.path / "c";
  std::ostringstream err;
  CHECK(cli::cmd_gen(bad, err) == cli::kExitUsage);
  CHECK(err.str().find("conv_kernels") != std::string::npos);
  CHECK_FALSE(fs::exists(t.path / "c"));
}

TEST_CASE("extract: all valid, partial and total failure") {
  TempDir t("extract");
  const fs::path nets = population() / "networks";
  fs::create_directories(t.path / "in");
  for (const char* id : {"net_000000", "net_000001", "net_000002"}) {
    fs::copy_file(nets / (std::string(id) + ".prototxt"), t.path / "in" / (std::string(id) + ".prototxt"));
  }
  std::ostringstream log;

  cli::ExtractOptions ok;
  ok.inputs = {t.path / "in"};
  ok.output = t.path / "ok.csv";
  CHECK(cli::cmd_extract(ok, log) == cli::kExitOk);
  CHECK(archattr::load_attribute_csv(ok.output).rows.size() == 3);
  const json clean = json::parse(slurp(t.path / "ok.errors.json"));
  CHECK(clean["errors"].empty());

  write_text(t.path / "in" / "net_000002.prototxt", "layer { name: \"a\" type: \n");
  cli::ExtractOptions partial = ok;
  partial.output = t.path / "partial.csv";
  CHECK(cli::cmd_extract(partial, log) == cli::kExitPartial);
  const auto table = archattr::load_attribute_csv(partial.output);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].network_id == "net_000000");
  CHECK(table.rows[1].network_id == "net_000001");
  const json sidecar = json::parse(slurp(cli::extract_sidecar_path(partial.output)));
  REQUIRE(sidecar["errors"].size() == 1);
  CHECK(sidecar["errors"][0]["network_id"] == "net_000002");
  CHECK(sidecar["errors"][0]["code"] == "SyntaxError");

  cli::ExtractOptions none;
  none.inputs = {t.path / "in" / "net_000002.prototxt", t.path / "missing.prototxt"};
  none.output = t.path / "none.csv";
  CHECK(cli::cmd_extract(none, log) == cli::kExitFatal);
  CHECK(json::parse(slurp(t.path / "none.errors.json"))["failed"] == 2);
}

TEST_CASE("extract keeps file-list order and rejects duplicate ids") {
  TempDir t("extract_order");
  const fs::path nets = population() / "networks";
  std::ostringstream log;
  cli::ExtractOptions o;
  o.inputs = {nets / "net_000005.prototxt", nets / "net_000001.prototxt"};
  o.output = t.path / "o.csv";
  REQUIRE(cli::cmd_extract(o, log) == cli::kExitOk);
  const auto table = archattr::load_attribute_csv(o.output);
  CHECK(table.rows[0].network_id == "net_000005");
  CHECK(table.rows[1].network_id == "net_000001");

  o.inputs.push_back(nets / "net_000005.prototxt");
  CHECK(cli::cmd_extract(o, log) == cli::kExitUsage);
}

TEST_CASE("extract of a generated directory reproduces attributes.csv") {
  TempDir t("roundtrip");
  cli::ExtractOptions o;
  o.inputs = {population() / "networks"};
  o.output = t.path / "x.csv";
  std::ostringstream log;
  REQUIRE(cli::cmd_extract(o, log) == cli::kExitOk);
  CHECK(slurp(o.output) == slurp(population() / "attributes.csv"));
}

TEST_CASE("classify report structure and determinism") {
  TempDir t("classify");
  std::ostringstream log;
  auto o = classify_options(t.path / "a.json");
  o.threshold = 0.38;
  REQUIRE(cli::cmd_classify(o, log) == cli::kExitOk);
  const json r = json::parse(slurp(o.output));
  CHECK(r["command"] == "classify");
  CHECK(r["run_config"]["threshold"] == 0.38);
  REQUIRE(r["models"].size() == 2);
  CHECK(r["models"][0]["model"] == "rf");
  CHECK(r["models"][1]["model"] == "ert");
  for (const auto& m : r["models"]) {
    CHECK(m["cross_validation"]["fold_scores"].size() == 5);
    CHECK(m["test_accuracy"].is_number());
    CHECK(m["importances"].size() == 30);
    double sum = 0.0;
    for (const auto& row : m["importances"]) {
      sum += row["importance"].get<double>();
      CHECK(row["std_error"].is_number());
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  auto again = o;
  again.output = t.path / "b.json";
  REQUIRE(cli::cmd_classify(again, log) == cli::kExitOk);
  // The output path is echoed in the report, so compare with it normalized.
  json a = json::parse(slurp(o.output));
  json b = json::parse(slurp(again.output));
  b["run_config"]["output"] = a["run_config"]["output"];
  CHECK(a.dump() == b.dump());

  auto single = o;
  single.output = t.path / "c.json";
  single.model.threads = 1;
  REQUIRE(cli::cmd_classify(single, log) == cli::kExitOk);
  const std::string first = slurp(single.output);
  REQUIRE(cli::cmd_classify(single, log) == cli::kExitOk);
  CHECK(slurp(single.output) == first);
  // Thread count is not part of the report and does not change it.
  json c = json::parse(first);
  c["run_config"]["output"] = a["run_config"]["output"];
  CHECK(a.dump() == c.dump());
}

TEST_CASE("classify precondition failures exit 2") {
  TempDir t("classify_fail");
  std::ostringstream log;
  auto o = classify_options(t.path / "x.json");
  o.threshold = 5.0;
  CHECK(cli::cmd_classify(o, log) == cli::kExitUsage);
  o = classify_options(t.path / "x.json");
  o.input = population() / "attributes.csv";
  CHECK(cli::cmd_classify(o, log) == cli::kExitUsage);
  o = classify_options(t.path / "x.json");
  o.model.model = "svm";
  CHECK(cli::cmd_classify(o, log) == cli::kExitUsage);
  o = classify_options(t.path / "x.json");
  o.input = t.path / "missing.csv";
  CHECK(cli::cmd_classify(o, log) == cli::kExitFatal);
  CHECK_FALSE(fs::exists(t.path / "x.json"));
}

TEST_CASE("prune emits a 30-point curve and a CSV companion") {
  TempDir t("prune");
  std::ostringstream log;
  auto o = classify_options(t.path / "curve.json");
  o.model.model = "ert";
  o.model.trees = 10;
  REQUIRE(cli::cmd_prune(o, log) == cli::kExitOk);
  const json r = json::parse(slurp(o.output));
  REQUIRE(r["curves"].size() == 1);
  const auto& steps = r["curves"][0]["steps"];
  REQUIRE(steps.size() == 30);
  CHECK(steps[0]["removed_feature"].is_null());
  CHECK(steps[29]["remaining_features"] == 1);
  CHECK(r["curves"][0]["ranking"].size() == 30);

  const fs::path csv = cli::prune_curve_path(o.output);
  CHECK(csv == t.path / "curve.csv");
  std::istringstream lines(slurp(csv));
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 31);

  const std::string first = slurp(o.output);
  REQUIRE(cli::cmd_prune(o, log) == cli::kExitOk);
  CHECK(slurp(o.output) == first);
}

TEST_CASE("regress: base-only flag, planted recovery and Underdetermined") {
  TempDir t("regress");
  std::ostringstream log;
  cli::RegressOptions o;
  o.input = population() / "dataset.csv";
  o.output = t.path / "full.json";
  o.threshold = 0.77;
  // A few hundred healthy rows cannot carry 465 interaction columns.
  std::ostringstream err;
  CHECK(cli::cmd_regress(o, err) == cli::kExitUsage);
  CHECK(err.str().find("--base-only") != std::string::npos);

  o.base_only = true;
  o.output = t.path / "base.json";
  REQUIRE(cli::cmd_regress(o, log) == cli::kExitOk);
  const json r = json::parse(slurp(o.output));
  CHECK(r["run_config"]["base_only"] == true);
  CHECK(r["data"]["design_columns"] == 30);
  CHECK(r["coefficients"][0]["name"] == "(intercept)");
  const auto& top = r["coefficients_by_magnitude"];
  for (std::size_t i = 1; i < top.size(); ++i) {
    CHECK(std::abs(top[i - 1]["estimate"].get<double>()) >=
          std::abs(top[i]["estimate"].get<double>()));
  }
  std::set<std::string> top3;
  for (int i = 0; i < 3; ++i) top3.insert(top[i]["name"].get<std::string>());
  CHECK(top3 == std::set<std::string>{"net_depth_avg", "avg_IP_neurons", "prop_square_kernels"});
  CHECK(r["qq"]["theoretical"].size() == r["residuals"].size());
  CHECK(r["p_values"].size() == r["coefficients"].size());
  CHECK(r["boxcox_lambda"].is_number());
}

TEST_CASE("regress with interactions names products in sorted order") {
  TempDir t("regress_full");
  cli::GenOptions g;
  g.count = 2500;
  g.seed = 3;
  g.output = t.path / "pop";
  std::ostringstream log;
  REQUIRE(cli::cmd_gen(g, log) == cli::kExitOk);
  cli::RegressOptions o;
  o.input = t.path / "pop" / "dataset.csv";
  o.output = t.path / "r.json";
  o.threshold = 0.77;
  REQUIRE(cli::cmd_regress(o, log) == cli::kExitOk);
  const json r = json::parse(slurp(o.output));
  bool found = false;
  for (const auto& c : r["coefficients"]) found |= c["name"] == "avg_IP_neurons*net_depth_avg";
  for (const auto& c : r["dropped"]) found |= c["name"] == "avg_IP_neurons*net_depth_avg";
  CHECK(found);
  CHECK(r["data"]["design_columns"] == 465);
}
