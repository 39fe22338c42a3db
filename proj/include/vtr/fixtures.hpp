#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vtr/model.hpp"

namespace vtr {

/// Manifest layout (JSON, paths relative to the manifest's directory):
///
///   {
///     "format": "vtr-fixtures", "version": 1,
///     "weights": "model.vtrw",
///     "tolerance": {"relative": 1e-4, "row_sum": 1e-6, "diagonal": 1e-6},
///     "samples": [
///       {"name": "s0", "image": "s0/image.vtrt", "expected_class": 2,
///        "trace": {"input": "s0/trace/input.vtrt", ...}}
///     ]
///   }
struct FixtureSample {
  std::string name;
  std::filesystem::path image;
  std::size_t expected_class = 0;
  std::vector<std::pair<std::string, std::filesystem::path>> trace;
};

struct FixtureManifest {
  std::filesystem::path root;
  std::filesystem::path weights;
  double relative_tolerance = 1e-4;
  double row_sum_tolerance = 1e-6;
  double diagonal_tolerance = 1e-6;
  std::vector<FixtureSample> samples;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Parses `<dir>/manifest.json`. Throws IoError when the directory holds no
/// manifest or a referenced file is missing, FormatError on malformed JSON.
FixtureManifest load_manifest(const std::filesystem::path& dir);

struct StageComparison {
  std::string stage;
  bool passed = false;
  double error = 0.0;  // max |a - b| / max |b|
  std::string detail;
};

/// Compares every stage of `expected` against `actual`. Missing stages and
/// shape differences fail.
std::vector<StageComparison> compare_traces(const ActivationTrace& expected, const ActivationTrace& actual,
                                            double tolerance);

struct CheckResult {
  std::string sample;
  std::string check;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  std::size_t failures() const;
  std::string to_text() const;
};

/// Runs every golden-trace and invariant check described by the manifest in `dir`.
ValidationReport validate_fixtures(const std::filesystem::path& dir);

/// Softmax-row and masked-diagonal checks on a stacked attention score stage.
/// Returns an empty string when both hold, otherwise a description.
std::string check_attention_scores(const Matrix& scores, std::size_t heads, double row_sum_tol,
                                   double diagonal_tol);

}  // namespace vtr
