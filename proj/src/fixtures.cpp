#include "vtr/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "vtr/accel.hpp"
#include "vtr/errors.hpp"
#include "vtr/io.hpp"

namespace vtr {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

fs::path existing(const fs::path& root, const std::string& rel, const std::string& what) {
  const fs::path p = root / rel;
  if (!fs::is_regular_file(p)) throw IoError("manifest references missing " + what + " '" + p.string() + "'");
  return p;
}

std::string fmt_error(double e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", e);
  return buf;
}

}  // namespace

FixtureManifest load_manifest(const fs::path& dir) {
  const fs::path file = dir / kManifestName;
  if (!fs::is_regular_file(file)) {
    throw IoError("no fixtures in '" + dir.string() + "' (" + kManifestName + " not found)");
  }
  std::ifstream in(file);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }

  FixtureManifest m;
  m.root = dir;
  try {
    if (doc.value("format", std::string{}) != "vtr-fixtures") {
      throw FormatError(file.string() + ": \"format\" must be \"vtr-fixtures\"");
    }
    if (doc.value("version", 0) != 1) throw VersionMismatch(file.string() + ": unsupported manifest version");
    m.weights = existing(dir, doc.at("weights").get<std::string>(), "weights");
    if (doc.contains("tolerance")) {
      const auto& t = doc["tolerance"];
      m.relative_tolerance = t.value("relative", m.relative_tolerance);
      m.row_sum_tolerance = t.value("row_sum", m.row_sum_tolerance);
      m.diagonal_tolerance = t.value("diagonal", m.diagonal_tolerance);
    }
    for (const auto& s : doc.at("samples")) {
      FixtureSample sample;
      sample.name = s.at("name").get<std::string>();
      sample.image = existing(dir, s.at("image").get<std::string>(), "image");
      sample.expected_class = s.at("expected_class").get<std::size_t>();
      for (const auto& [stage, path] : s.at("trace").items()) {
        sample.trace.emplace_back(stage, existing(dir, path.get<std::string>(), "trace file"));
      }
      m.samples.push_back(std::move(sample));
    }
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
  if (m.samples.empty()) throw IoError("no fixtures in '" + dir.string() + "' (manifest lists no samples)");
  return m;
}

std::vector<StageComparison> compare_traces(const ActivationTrace& expected, const ActivationTrace& actual,
                                            double tolerance) {
  std::vector<StageComparison> out;
  for (const auto& [name, want] : expected.entries()) {
    StageComparison c;
    c.stage = name;
    const Matrix* got = actual.find(name);
    if (!got) {
      c.detail = "stage missing";
    } else if (got->rows() != want.rows() || got->cols() != want.cols()) {
      c.detail = "shape " + std::to_string(got->rows()) + "x" + std::to_string(got->cols()) + ", expected " +
                 std::to_string(want.rows()) + "x" + std::to_string(want.cols());
    } else {
      c.error = max_relative_error(*got, want);
      c.passed = c.error <= tolerance;
      c.detail = "relative error " + fmt_error(c.error);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string check_attention_scores(const Matrix& scores, std::size_t heads, double row_sum_tol,
                                   double diagonal_tol) {
  const std::size_t n = scores.cols();
  if (heads == 0 || scores.rows() != heads * n) return "score matrix is not heads*(N+1) x (N+1)";
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    double sum = 0.0;
    for (float v : scores.row(r)) sum += v;
    if (std::abs(sum - 1.0) > row_sum_tol) {
      return "row " + std::to_string(r) + " sums to " + std::to_string(sum);
    }
    const float diag = scores(r, r % n);
    if (!(diag < diagonal_tol)) return "diagonal at row " + std::to_string(r) + " is " + fmt_error(diag);
  }
  return {};
}

bool ValidationReport::passed() const { return failures() == 0 && !checks.empty(); }

std::size_t ValidationReport::failures() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += !c.passed;
  return n;
}

std::string ValidationReport::to_text() const {
  std::string out;
  for (const auto& c : checks) {
    out += std::string(c.passed ? "PASS " : "FAIL ") + c.sample + " " + c.check;
    if (!c.detail.empty()) out += " (" + c.detail + ")";
    out += "\n";
  }
  out += std::to_string(checks.size() - failures()) + "/" + std::to_string(checks.size()) + " checks passed\n";
  return out;
}

ValidationReport validate_fixtures(const fs::path& dir) {
  const FixtureManifest m = load_manifest(dir);
  const auto [weights, cfg] = io::load_weights(m.weights);
  ValidationReport report;
  auto add = [&](const std::string& sample, std::string check, bool ok, std::string detail = {}) {
    report.checks.push_back({sample, std::move(check), ok, std::move(detail)});
  };

  for (const auto& s : m.samples) {
    const Image img = io::load_image(s.image);
    ActivationTrace actual;
    const Logits logits = forward(img, weights, cfg, &actual);

    ActivationTrace expected;
    for (const auto& [stage, path] : s.trace) expected.record(stage, io::to_matrix(io::read_tensor(path)));

    // Every stage of the grammar must be present in the golden bundle.
    std::string missing;
    for (const auto& name : trace_stage_names(cfg)) {
      if (!expected.find(name)) missing += (missing.empty() ? "" : ", ") + name;
    }
    add(s.name, "trace covers all stages", missing.empty(), missing.empty() ? "" : "missing " + missing);

    for (const auto& c : compare_traces(expected, actual, m.relative_tolerance)) {
      add(s.name, "stage " + c.stage, c.passed, c.detail);
    }

    add(s.name, "argmax", logits.argmax() == s.expected_class,
        "got " + std::to_string(logits.argmax()) + ", expected " + std::to_string(s.expected_class));

    for (std::size_t i = 0; i < cfg.depth; ++i) {
      const std::string stage = "layer" + std::to_string(i) + ".attn_scores";
      const std::string problem =
          check_attention_scores(actual.at(stage), cfg.heads, m.row_sum_tolerance, m.diagonal_tolerance);
      add(s.name, stage + " invariants", problem.empty(), problem);
    }

    const auto sim = accel::simulate_forward(img, weights, cfg, accel::AccelConfig{});
    const Matrix engine_logits(1, logits.values.size(), logits.values);
    const Matrix sim_logits(1, sim.logits.values.size(), sim.logits.values);
    const double err = max_relative_error(sim_logits, engine_logits);
    add(s.name, "simulator logits", err <= m.relative_tolerance, "relative error " + fmt_error(err));
  }
  return report;
}

}  // namespace vtr
