#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "archattr/commands.hpp"

namespace cli = archattr::cli;

namespace {

void add_model_flags(CLI::App* sub, cli::ClassifyOptions& o) {
  sub->add_option("--input", o.input, "attribute CSV with an accuracy column")->required();
  sub->add_option("--output", o.output, "JSON report path")->required();
  sub->add_option("--threshold", o.threshold, "healthy iff accuracy > threshold")->required();
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
  sub->add_option("--model", o.model.model, "rf, ert or both")
      ->check(CLI::IsMember({"rf", "ert", "both"}))
      ->capture_default_str();
  sub->add_option("--trees", o.model.trees, "trees per ensemble")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--folds", o.folds, "cross-validation folds")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  sub->add_option("--test-fraction", o.test_fraction, "held-out fraction")
      ->capture_default_str();
  sub->add_option("--max-depth", o.model.max_depth, "tree depth limit (unlimited if unset)");
  sub->add_option("--min-samples-leaf", o.model.min_samples_leaf, "minimum rows per leaf")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--features-per-split", o.model.features_per_split,
                  "candidate features per split (sqrt(p) if unset)");
  sub->add_option("--threads", o.model.threads, "worker threads, 0 = all cores");
  sub->fallthrough();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Architectural attribute extraction and analysis for neural networks"};
  app.set_version_flag("--version", ARCHATTR_VERSION);
  app.require_subcommand(1);
  app.set_config("--config", "", "run configuration file, one [subcommand] section per command");
  app.allow_config_extras(false);

  cli::ExtractOptions extract;
  auto* ex = app.add_subcommand("extract", "extract the 30 attributes from network files");
  ex->add_option("--input", extract.inputs, "directories of .prototxt files or single files")
      ->required()
      ->expected(1, -1);
  ex->add_option("--output", extract.output, "attribute CSV path")->required();
  ex->add_option("--threads", extract.threads, "worker threads, 0 = all cores");
  ex->fallthrough();

  cli::ClassifyOptions classify;
  auto* cl = app.add_subcommand("classify", "broken/healthy classification with RF and ERT");
  add_model_flags(cl, classify);

  cli::ClassifyOptions prune;
  auto* pr = app.add_subcommand("prune", "importance pruning curve");
  add_model_flags(pr, prune);

  cli::RegressOptions regress;
  auto* rg = app.add_subcommand("regress", "OLS on Box-Cox accuracy of healthy networks");
  rg->add_option("--input", regress.input, "attribute CSV with an accuracy column")->required();
  rg->add_option("--output", regress.output, "JSON report path")->required();
  rg->add_option("--threshold", regress.threshold, "healthy iff accuracy > threshold")
      ->required();
  rg->add_option("--seed", regress.seed, "master seed (recorded only)")->capture_default_str();
  rg->add_flag("--base-only", regress.base_only, "skip pairwise interaction terms");
  rg->fallthrough();

  // gen has its own settings file, so its --config shadows the global one.
  cli::GenOptions gen;
  std::optional<std::string> gen_config;
  auto* gn = app.add_subcommand("gen", "generate a planted-signal population");
  gn->add_option("--config", gen_config, "generator settings file")->check(CLI::ExistingFile);
  gn->add_option("-n,--count", gen.count, "number of networks (overrides the settings)");
  gn->add_option("--seed", gen.seed, "generator seed (overrides the settings)");
  gn->add_option("--output", gen.output, "output directory")->required();
  gn->add_option("--threads", gen.threads, "worker threads, 0 = all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*ex) return cli::cmd_extract(extract, std::cerr);
  if (*cl) return cli::cmd_classify(classify, std::cerr);
  if (*pr) return cli::cmd_prune(prune, std::cerr);
  if (*rg) return cli::cmd_regress(regress, std::cerr);
  if (gen_config) gen.config = *gen_config;
  return cli::cmd_gen(gen, std::cerr);
}
