#include "archattr/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"

#include "archattr/attribute_table.hpp"
#include "archattr/attributes.hpp"
#include "archattr/boxcox.hpp"
#include "archattr/dataset.hpp"
#include "archattr/error.hpp"
#include "archattr/forest.hpp"
#include "archattr/ols.hpp"
#include "archattr/parallel.hpp"
#include "archattr/parser.hpp"
#include "archattr/popgen.hpp"
#include "archattr/rng.hpp"

namespace archattr::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Seed streams derived from the master seed.
constexpr std::uint64_t kBalanceStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kFitStream = 3;
constexpr std::uint64_t kCvStream = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::DegenerateSplit:
    case ErrorCode::TooFewSamples:
    case ErrorCode::Underdetermined:
    case ErrorCode::NotBinary:
    case ErrorCode::NonPositiveValue:
    case ErrorCode::DegenerateVariance:
      return kExitUsage;
    default:
      return kExitFatal;
  }
}

template <typename Fn>
int guarded(std::string_view command, std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    log << "archattr " << command << ": error [" << to_string(e.code()) << "]: " << e.what()
        << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log << "archattr " << command << ": fatal: " << e.what() << '\n';
    return kExitFatal;
  }
}

json header(std::string_view command) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = {{"name", "archattr"}, {"version", ARCHATTR_VERSION}};
  j["command"] = command;
  return j;
}

// nlohmann writes NaN and infinities as null.
void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

json optional_int(const std::optional<int>& v) {
  return v ? json(*v) : json(nullptr);
}

std::vector<ml::ModelSpec> model_specs(const ModelOptions& m) {
  auto configure = [&](ml::ModelSpec s) {
    s.n_trees = m.trees;
    s.max_depth = m.max_depth;
    s.min_samples_leaf = m.min_samples_leaf;
    s.features_per_split = m.features_per_split;
    s.threads = m.threads;
    s.validate();
    return s;
  };
  std::vector<ml::ModelSpec> out;
  if (m.model == "rf" || m.model == "both") out.push_back(configure(ml::ModelSpec::random_forest()));
  if (m.model == "ert" || m.model == "both") out.push_back(configure(ml::ModelSpec::extra_trees()));
  if (out.empty()) {
    throw Error(ErrorCode::Config, "model: expected rf, ert or both, got '" + m.model + "'");
  }
  return out;
}

json spec_json(const ml::ModelSpec& s, std::size_t num_features) {
  return {{"kind", to_string(s.kind)},
          {"trees", s.n_trees},
          {"max_depth", optional_int(s.max_depth)},
          {"min_samples_leaf", s.min_samples_leaf},
          {"features_per_split", s.resolve_features(num_features)},
          {"bootstrap", s.bootstrap}};
}

json classify_run_config(const ClassifyOptions& o) {
  return {{"input", o.input.generic_string()},
          {"output", o.output.generic_string()},
          {"threshold", o.threshold},
          {"seed", o.seed},
          {"folds", o.folds},
          {"test_fraction", o.test_fraction},
          {"model", o.model.model},
          {"trees", o.model.trees},
          {"max_depth", optional_int(o.model.max_depth)},
          {"min_samples_leaf", o.model.min_samples_leaf},
          {"features_per_split", optional_int(o.model.features_per_split)}};
}

void check_classify_options(const ClassifyOptions& o) {
  if (!std::isfinite(o.threshold)) throw Error(ErrorCode::Config, "threshold must be finite");
  if (o.folds < 2) throw Error(ErrorCode::Config, "folds must be at least 2");
  if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) {
    throw Error(ErrorCode::Config, "test_fraction must lie in (0, 1)");
  }
}

json cv_json(const ml::CvResult& cv) {
  return {{"fold_scores", cv.fold_scores},
          {"mean", cv.mean},
          {"std", cv.std},
          {"std_error", cv.std_error}};
}

struct PreparedData {
  std::size_t input_rows = 0;
  ml::Dataset balanced;
  ml::Dataset train;
  ml::Dataset test;
};

PreparedData prepare(const ClassifyOptions& o) {
  PreparedData p;
  const ml::Dataset all = ml::dataset_from_table(load_attribute_csv(o.input));
  p.input_rows = all.rows();
  p.balanced = ml::balance_classes(all, o.threshold, derive_seed(o.seed, kBalanceStream));
  auto [train, test] = ml::train_test_split(p.balanced, o.test_fraction,
                                            derive_seed(o.seed, kSplitStream));
  p.train = std::move(train);
  p.test = std::move(test);
  return p;
}

json data_json(const PreparedData& p) {
  return {{"input_rows", p.input_rows},
          {"balanced_rows", p.balanced.rows()},
          {"healthy_rows", ml::count_label(p.balanced, ml::kHealthy)},
          {"broken_rows", ml::count_label(p.balanced, ml::kBroken)},
          {"train_rows", p.train.rows()},
          {"test_rows", p.test.rows()},
          {"features", p.train.columns}};
}

// Model m uses streams derived from (kFitStream, m) and (kCvStream, m).
std::uint64_t model_seed(std::uint64_t master, std::uint64_t stream, std::size_t m) {
  return derive_seed(derive_seed(master, stream), m);
}

std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().extension() == ".prototxt") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
      });
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  return files;
}

json gen_config_json(const gen::GenConfig& c) {
  return {{"population", c.population},
          {"seed", c.seed},
          {"min_layers", c.min_layers},
          {"max_layers", c.max_layers},
          {"input_topology", c.inputs == gen::InputTopology::ThreeView ? "three_view" : "single"},
          {"output_topology", c.outputs == gen::OutputTopology::Dual ? "dual" : "single"},
          {"input_height", c.input_shape.height},
          {"input_width", c.input_shape.width},
          {"input_channels", c.input_shape.channels},
          {"conv_kernels", c.conv_kernels},
          {"conv_strides", c.conv_strides},
          {"conv_pads", c.conv_pads},
          {"pool_kernels", c.pool_kernels},
          {"pool_strides", c.pool_strides},
          {"conv_features", c.conv_features},
          {"ip_neurons", c.ip_neurons},
          {"weights",
           {{"convolution", c.weights.convolution},
            {"pooling", c.weights.pooling},
            {"inner_product", c.weights.inner_product},
            {"relu", c.weights.relu},
            {"sigmoid", c.weights.sigmoid}}}};
}

json plant_json(const gen::PlantSpec& p) {
  json signals = json::array();
  for (const auto& s : p.signals) {
    signals.push_back({{"feature", s.feature},
                       {"weight", s.weight},
                       {"mean", s.mean ? json(*s.mean) : json(nullptr)},
                       {"scale", s.scale ? json(*s.scale) : json(nullptr)}});
  }
  return {{"signals", signals},
          {"link", p.link == gen::Link::Logistic ? "logistic" : "linear_clipped"},
          {"intercept", p.intercept},
          {"noise", p.noise},
          {"broken_p", p.broken_p},
          {"broken_min", p.broken_min},
          {"broken_max", p.broken_max}};
}

}  // namespace

fs::path prune_curve_path(const fs::path& report) {
  fs::path p = report;
  p.replace_extension(".csv");
  return p;
}

fs::path extract_sidecar_path(const fs::path& csv) {
  return csv.parent_path() / (csv.stem().string() + ".errors.json");
}

int cmd_extract(const ExtractOptions& opts, std::ostream& log) {
  return guarded("extract", log, [&] {
    if (opts.inputs.empty()) throw Error(ErrorCode::Config, "no input files given");
    const std::vector<fs::path> files = expand_inputs(opts.inputs);
    if (files.empty()) throw Error(ErrorCode::Config, "no .prototxt files found in the inputs");

    std::set<std::string> seen;
    for (const auto& f : files) {
      if (!seen.insert(f.stem().string()).second) {
        throw Error(ErrorCode::Config, "duplicate network id '" + f.stem().string() + "' (" +
                                           f.generic_string() + ")");
      }
    }

    struct Outcome {
      std::optional<AttributeVector> row;
      std::string code;
      std::string message;
    };
    std::vector<Outcome> results(files.size());
    parallel_for(
        files.size(),
        [&](std::size_t i) {
          try {
            results[i].row = extract_attributes(load_network(files[i]), files[i].stem().string());
          } catch (const Error& e) {
            results[i].code = to_string(e.code());
            results[i].message = e.what();
          } catch (const std::exception& e) {
            results[i].code = "Internal";
            results[i].message = e.what();
          }
        },
        opts.threads);

    AttributeTable table;
    json errors = json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (results[i].row) {
        table.rows.push_back(std::move(*results[i].row));
      } else {
        errors.push_back({{"file", files[i].generic_string()},
                          {"network_id", files[i].stem().string()},
                          {"code", results[i].code},
                          {"message", results[i].message}});
      }
    }

    if (opts.output.has_parent_path()) fs::create_directories(opts.output.parent_path());
    save_attribute_csv(opts.output, table);
    json sidecar = header("extract");
    sidecar["files"] = files.size();
    sidecar["extracted"] = table.rows.size();
    sidecar["failed"] = errors.size();
    sidecar["errors"] = errors;
    write_json(extract_sidecar_path(opts.output), sidecar);

    log << "extracted " << table.rows.size() << " of " << files.size() << " networks\n";
    for (const auto& e : errors) {
      log << "  " << e["file"].get<std::string>() << ": [" << e["code"].get<std::string>()
          << "] " << e["message"].get<std::string>() << '\n';
    }
    if (errors.empty()) return kExitOk;
    return table.rows.empty() ? kExitFatal : kExitPartial;
  });
}

int cmd_classify(const ClassifyOptions& opts, std::ostream& log) {
  return guarded("classify", log, [&] {
    check_classify_options(opts);
    const auto specs = model_specs(opts.model);
    const PreparedData data = prepare(opts);
    const std::size_t p = data.train.cols();

    json report = header("classify");
    report["run_config"] = classify_run_config(opts);
    json seeds = {{"master", opts.seed},
                  {"balance", derive_seed(opts.seed, kBalanceStream)},
                  {"split", derive_seed(opts.seed, kSplitStream)}};
    json models = json::array();
    for (std::size_t m = 0; m < specs.size(); ++m) {
      const auto& spec = specs[m];
      const std::string kind(to_string(spec.kind));
      const std::uint64_t fit_seed = model_seed(opts.seed, kFitStream, m);
      const std::uint64_t cv_seed = model_seed(opts.seed, kCvStream, m);
      seeds[kind] = {{"fit", fit_seed}, {"cross_validation", cv_seed}};

      const ml::CvResult cv =
          ml::kfold_cv(spec, data.train, static_cast<std::size_t>(opts.folds), cv_seed);
      const ml::Ensemble model = ml::fit_ensemble(spec, data.train, fit_seed);
      const ml::ImportanceSummary imp = ml::feature_importances(model);

      std::vector<std::size_t> order(p);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return imp.mean[a] > imp.mean[b]; });
      json table = json::array();
      for (std::size_t c : order) {
        table.push_back({{"feature", data.train.columns[c]},
                         {"importance", imp.mean[c]},
                         {"std_error", imp.std_error[c]}});
      }
      const double sum = std::accumulate(imp.mean.begin(), imp.mean.end(), 0.0);
      const double test_acc = model.accuracy(data.test);

      models.push_back({{"model", kind},
                        {"spec", spec_json(spec, p)},
                        {"cross_validation", cv_json(cv)},
                        {"test_accuracy", test_acc},
                        {"train_accuracy", model.accuracy(data.train)},
                        {"importance_sum", sum},
                        {"importances", table}});
      log << kind << ": cv " << cv.mean << " +/- " << cv.std << ", test " << test_acc << '\n';
    }
    report["seeds"] = seeds;
    report["data"] = data_json(data);
    report["models"] = models;
    write_json(opts.output, report);
    return kExitOk;
  });
}

int cmd_prune(const ClassifyOptions& opts, std::ostream& log) {
  return guarded("prune", log, [&] {
    check_classify_options(opts);
    const auto specs = model_specs(opts.model);
    const PreparedData data = prepare(opts);
    const std::size_t p = data.train.cols();

    json report = header("prune");
    report["run_config"] = classify_run_config(opts);
    json seeds = {{"master", opts.seed},
                  {"balance", derive_seed(opts.seed, kBalanceStream)},
                  {"split", derive_seed(opts.seed, kSplitStream)}};
    json curves = json::array();
    std::string csv = "model,removed_count,removed_feature,remaining_features,cv_mean,cv_std,cv_std_error\n";
    for (std::size_t m = 0; m < specs.size(); ++m) {
      const auto& spec = specs[m];
      const std::string kind(to_string(spec.kind));
      const std::uint64_t cv_seed = model_seed(opts.seed, kCvStream, m);
      seeds[kind] = {{"prune", cv_seed}};

      const ml::PruneCurve curve =
          ml::prune_loop(spec, data.train, static_cast<std::size_t>(opts.folds), cv_seed);
      json steps = json::array();
      for (const auto& s : curve.steps) {
        const std::size_t remaining = p - s.removed_count;
        steps.push_back({{"removed_count", s.removed_count},
                         {"removed_feature", s.removed_feature.empty()
                                                 ? json(nullptr)
                                                 : json(s.removed_feature)},
                         {"remaining_features", remaining},
                         {"cross_validation", cv_json(s.cv)}});
        csv += kind + "," + std::to_string(s.removed_count) + "," + s.removed_feature + "," +
               std::to_string(remaining) + "," + format_double(s.cv.mean) + "," +
               format_double(s.cv.std) + "," + format_double(s.cv.std_error) + "\n";
      }
      json ranking = json::array();
      for (std::size_t r = 0; r < curve.ranking.size(); ++r) {
        ranking.push_back(
            {{"feature", curve.ranking[r]}, {"importance", curve.initial_importance[r]}});
      }
      curves.push_back({{"model", kind},
                        {"spec", spec_json(spec, p)},
                        {"ranking", ranking},
                        {"steps", steps}});
      log << kind << ": " << curve.steps.size() << " prune steps, full-set cv "
          << curve.steps.front().cv.mean << '\n';
    }
    report["seeds"] = seeds;
    report["data"] = data_json(data);
    report["curves"] = curves;
    report["curve_csv"] = prune_curve_path(opts.output).filename().generic_string();
    write_json(opts.output, report);

    const fs::path csv_path = prune_curve_path(opts.output);
    std::ofstream out(csv_path, std::ios::binary);
    out << csv;
    if (!out) throw Error(ErrorCode::Io, "failed writing " + csv_path.string());
    return kExitOk;
  });
}

int cmd_regress(const RegressOptions& opts, std::ostream& log) {
  return guarded("regress", log, [&] {
    if (!std::isfinite(opts.threshold)) throw Error(ErrorCode::Config, "threshold must be finite");
    const ml::Dataset all = ml::dataset_from_table(load_attribute_csv(opts.input));
    std::vector<std::size_t> healthy;
    for (std::size_t r = 0; r < all.rows(); ++r) {
      if (all.target[r] > opts.threshold) healthy.push_back(r);
    }
    if (healthy.empty()) {
      throw Error(ErrorCode::TooFewSamples,
                  "no rows have accuracy above the threshold " + format_double(opts.threshold));
    }
    const ml::Dataset d = all.select_rows(healthy);

    const double lambda = ml::boxcox_lambda(d.target);
    const std::vector<double> y = ml::boxcox_transform(d.target, lambda);

    ml::Expanded design{d.x, d.columns};
    if (!opts.base_only) design = ml::interaction_expand(d.x, d.columns);
    if (d.rows() <= static_cast<std::size_t>(design.x.cols()) + 1) {
      throw Error(ErrorCode::Underdetermined,
                  std::to_string(d.rows()) + " healthy rows cannot support " +
                      std::to_string(design.x.cols() + 1) +
                      " parameters; use more networks or --base-only");
    }
    const ml::Standardized z = ml::standardize(design.x);
    ml::OlsReport fit = ml::ols_fit(z.z, y, design.names);
    fit.boxcox_lambda = lambda;

    auto coef_json = [](const ml::Coefficient& c) {
      return json{{"name", c.name},
                  {"estimate", c.estimate},
                  {"std_error", c.std_error},
                  {"t", c.t},
                  {"p_value", c.p_value}};
    };
    json coefficients = json::array();
    json p_values = json::array();
    for (const auto& c : fit.coefficients) {
      coefficients.push_back(coef_json(c));
      p_values.push_back({{"name", c.name}, {"p_value", c.p_value}});
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 1; i < fit.coefficients.size(); ++i) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(fit.coefficients[a].estimate) > std::abs(fit.coefficients[b].estimate);
    });
    json by_magnitude = json::array();
    for (std::size_t i : order) by_magnitude.push_back(coef_json(fit.coefficients[i]));
    json dropped = json::array();
    for (const auto& c : fit.dropped) dropped.push_back({{"name", c.name}, {"reason", c.reason}});

    json report = header("regress");
    report["run_config"] = {{"input", opts.input.generic_string()},
                            {"output", opts.output.generic_string()},
                            {"threshold", opts.threshold},
                            {"seed", opts.seed},
                            {"base_only", opts.base_only}};
    report["seeds"] = {{"master", opts.seed}};
    report["data"] = {{"input_rows", all.rows()},
                      {"healthy_rows", d.rows()},
                      {"design_columns", design.x.cols()}};
    report["boxcox_lambda"] = lambda;
    report["fit"] = {{"n", fit.n},
                     {"dof", fit.dof},
                     {"sigma", fit.sigma},
                     {"r_squared", fit.r_squared},
                     {"adj_r_squared", fit.adj_r_squared}};
    report["coefficients"] = coefficients;
    report["coefficients_by_magnitude"] = by_magnitude;
    report["p_values"] = p_values;
    report["dropped"] = dropped;
    report["row_ids"] = d.row_ids;
    report["fitted"] = fit.fitted;
    report["residuals"] = fit.residuals;
    report["qq"] = {{"theoretical", fit.qq_theoretical}, {"sample", fit.qq_sample}};
    write_json(opts.output, report);

    log << "regress: " << d.rows() << " healthy rows, lambda " << lambda << ", R^2 "
        << fit.r_squared << ", " << fit.dropped.size() << " columns dropped\n";
    return kExitOk;
  });
}

int cmd_gen(const GenOptions& opts, std::ostream& log) {
  return guarded("gen", log, [&] {
    gen::GenSettings settings;
    if (opts.config) settings = gen::load_gen_settings(*opts.config);
    if (opts.count) settings.config.population = *opts.count;
    if (opts.seed) settings.config.seed = *opts.seed;
    settings.config.validate();
    settings.plant.validate();

    const gen::Population pop = gen::generate_population(settings.config, settings.plant,
                                                         opts.threads);
    gen::write_population(pop, opts.output);

    json manifest = header("gen");
    manifest["run_config"] = {
        {"config", opts.config ? json(opts.config->generic_string()) : json(nullptr)},
        {"output", opts.output.generic_string()}};
    manifest["seeds"] = {{"master", settings.config.seed}};
    manifest["generator"] = gen_config_json(settings.config);
    manifest["plant"] = plant_json(pop.plant);
    manifest["networks"] = pop.networks.size();
    manifest["files"] = {{"networks", "networks"},
                         {"attributes", "attributes.csv"},
                         {"dataset", "dataset.csv"}};
    write_json(opts.output / "manifest.json", manifest);

    log << "generated " << pop.networks.size() << " networks in " << opts.output.string() << '\n';
    return kExitOk;
  });
}

}  // namespace archattr::cli
