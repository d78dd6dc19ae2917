#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace archattr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPartial = 3;

inline constexpr int kReportSchemaVersion = 1;

struct ExtractOptions {
  // Directories contribute their *.prototxt files in file-name order; plain
  // files are taken in the order given.
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output;  // CSV; the sidecar is <output>.errors.json
  unsigned threads = 0;
};

struct ModelOptions {
  std::string model = "both";  // rf | ert | both
  int trees = 100;
  std::optional<int> max_depth;
  int min_samples_leaf = 1;
  std::optional<int> features_per_split;
  unsigned threads = 0;
};

struct ClassifyOptions {
  std::filesystem::path input;
  std::filesystem::path output;  // JSON report
  double threshold = 0.0;
  std::uint64_t seed = 1;
  int folds = 5;
  double test_fraction = 0.2;
  ModelOptions model;
};

struct RegressOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  double threshold = 0.0;
  std::uint64_t seed = 1;
  bool base_only = false;
};

struct GenOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::size_t> count;    // overrides the config's population
  std::optional<std::uint64_t> seed;   // overrides the config's seed
  std::filesystem::path output;        // directory
  unsigned threads = 0;
};

// Each command writes only its declared outputs, logs to `log` and returns
// an exit code: 0 ok, 1 fatal, 2 configuration or data precondition, 3 partial.
int cmd_extract(const ExtractOptions& opts, std::ostream& log);
int cmd_classify(const ClassifyOptions& opts, std::ostream& log);
// Also writes the curve as CSV next to the report (same stem, .csv).
int cmd_prune(const ClassifyOptions& opts, std::ostream& log);
int cmd_regress(const RegressOptions& opts, std::ostream& log);
// Writes the population plus manifest.json into opts.output.
int cmd_gen(const GenOptions& opts, std::ostream& log);

std::filesystem::path prune_curve_path(const std::filesystem::path& report);
std::filesystem::path extract_sidecar_path(const std::filesystem::path& csv);

}  // namespace archattr::cli
