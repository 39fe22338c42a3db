// vtr: inference, accelerator simulation, counting, fixture validation and
// benchmarking from the command line.
//
// Exit codes: 0 success, 1 validation or comparison failure, 2 usage error,
// 3 I/O or format error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vtr/accel.hpp"
#include "vtr/bench.hpp"
#include "vtr/counters.hpp"
#include "vtr/errors.hpp"
#include "vtr/fixtures.hpp"
#include "vtr/io.hpp"
#include "vtr/model.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

struct UsageError : vtr::Error {
  using vtr::Error::Error;
};

struct Preset {
  std::string name;
  std::size_t size;
  std::size_t classes;
};

const std::vector<Preset> kPresets = {{"mstar", 88, 10}, {"synthwake", 128, 10}, {"gbsar", 88, 7}};

struct ConfigFlags {
  vtr::VtrConfig cfg;
  std::string preset;
  std::vector<CLI::Option*> options;

  void add(CLI::App* app) {
    options = {
        app->add_option("--preset", preset, "Dataset preset setting image size and classes")
            ->check(CLI::IsMember({"mstar", "synthwake", "gbsar"})),
        app->add_option("--height", cfg.image_height, "Image height")->capture_default_str(),
        app->add_option("--width", cfg.image_width, "Image width")->capture_default_str(),
        app->add_option("--channels", cfg.channels, "Image channels")->capture_default_str(),
        app->add_option("--patch", cfg.patch, "Patch side P")->capture_default_str(),
        app->add_option("--shifts", cfg.shifts, "Shift directions (0 disables shifting)")->capture_default_str(),
        app->add_option("--shift-magnitude", cfg.shift_magnitude, "Shift in pixels")->capture_default_str(),
        app->add_option("--dim", cfg.dim, "Embedding dimension D")->capture_default_str(),
        app->add_option("--depth", cfg.depth, "Encoder layers L")->capture_default_str(),
        app->add_option("--heads", cfg.heads, "Attention heads")->capture_default_str(),
        app->add_option("--mlp-ratio", cfg.mlp_ratio, "MLP hidden width / D")->capture_default_str(),
        app->add_option("--classes", cfg.num_classes, "Output classes")->capture_default_str(),
    };
  }

  bool any_set() const {
    for (auto* o : options)
      if (o->count() > 0) return true;
    return false;
  }

  vtr::VtrConfig resolve() const {
    vtr::VtrConfig c = cfg;
    for (const auto& p : kPresets) {
      if (p.name != preset) continue;
      if (options[1]->count() == 0) c.image_height = p.size;
      if (options[2]->count() == 0) c.image_width = p.size;
      if (options[11]->count() == 0) c.num_classes = p.classes;
    }
    try {
      c.validate();
    } catch (const vtr::InvalidConfig& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct AccelFlags {
  vtr::accel::AccelConfig cfg;
  double clock_mhz = 300.0;
  std::string cost_model = "ideal";

  void add(CLI::App* app) {
    app->add_option("--ph", cfg.hcus, "Head compute units p_h")->capture_default_str();
    app->add_option("--pt", cfg.pe_rows, "PE rows per HCU p_t")->capture_default_str();
    app->add_option("--pc", cfg.pe_cols, "PE columns per HCU p_c")->capture_default_str();
    app->add_option("--ppe", cfg.pe_size, "Systolic array side p_pe")->capture_default_str();
    app->add_option("--block", cfg.block, "Block size b (multiple of p_pe)")->capture_default_str();
    app->add_option("--clock-mhz", clock_mhz, "Clock frequency in MHz")->capture_default_str();
    app->add_option("--cost-model", cost_model, "PE cost model")
        ->check(CLI::IsMember({"ideal", "fill-drain"}))
        ->capture_default_str();
  }

  vtr::accel::AccelConfig resolve() const {
    vtr::accel::AccelConfig c = cfg;
    c.clock_hz = clock_mhz * 1e6;
    c.cost_model = cost_model == "fill-drain" ? vtr::accel::CostModel::fill_drain : vtr::accel::CostModel::ideal;
    try {
      c.validate();
    } catch (const vtr::InvalidConfig& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string human(std::uint64_t n) {
  if (n >= 1000000000) return fixed(n / 1e9, 2) + "G";
  if (n >= 1000000) return fixed(n / 1e6, 2) + "M";
  if (n >= 1000) return fixed(n / 1e3, 2) + "K";
  return std::to_string(n);
}

struct Loaded {
  vtr::WeightSet weights;
  vtr::VtrConfig cfg;
  vtr::Image image;
};

Loaded load_pair(const std::string& weights, const std::string& image) {
  auto [w, cfg] = vtr::io::load_weights(weights);
  vtr::Image img = vtr::io::load_image(image);
  if (img.height() != cfg.image_height || img.width() != cfg.image_width || img.channels() != cfg.channels) {
    throw vtr::ShapeInconsistent(image + ": image is " + std::to_string(img.height()) + "x" +
                                 std::to_string(img.width()) + "x" + std::to_string(img.channels()) +
                                 ", model expects " + std::to_string(cfg.image_height) + "x" +
                                 std::to_string(cfg.image_width) + "x" + std::to_string(cfg.channels));
  }
  return {std::move(w), cfg, std::move(img)};
}

json logits_json(const vtr::Logits& l) {
  return {{"logits", l.values}, {"probabilities", l.probabilities()}, {"argmax", l.argmax()}};
}

void print_probabilities(const vtr::Logits& l) {
  const auto p = l.probabilities();
  for (std::size_t i = 0; i < p.size(); ++i) std::cout << "class " << i << ": " << fixed(p[i], 6) << "\n";
  std::cout << "argmax: " << l.argmax() << "\n";
}

// ---- subcommands -----------------------------------------------------------

struct InferArgs {
  std::string weights, image, trace;
  bool json = false;
};

int run_infer(const InferArgs& a) {
  auto [w, cfg, img] = load_pair(a.weights, a.image);
  vtr::ActivationTrace trace;
  const vtr::Logits logits = vtr::forward(img, w, cfg, a.trace.empty() ? nullptr : &trace);
  if (!a.trace.empty()) vtr::io::write_trace(a.trace, trace);
  if (a.json) {
    std::cout << logits_json(logits).dump(2) << "\n";
  } else {
    print_probabilities(logits);
  }
  return kOk;
}

struct SimulateArgs {
  std::string weights, image;
  AccelFlags accel;
  bool json = false;
};

int run_simulate(const SimulateArgs& a) {
  const auto accel = a.accel.resolve();
  auto [w, cfg, img] = load_pair(a.weights, a.image);
  const auto sim = vtr::accel::simulate_forward(img, w, cfg, accel);
  if (a.json) {
    json doc = json::parse(sim.report.to_json());
    doc["inference"] = logits_json(sim.logits);
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << sim.report.to_text();
    print_probabilities(sim.logits);
  }
  return kOk;
}

struct CountArgs {
  std::string weights;
  ConfigFlags config;
  bool paper_comparable = false;
  bool json = false;
};

int run_count(const CountArgs& a) {
  vtr::VtrConfig cfg;
  if (!a.weights.empty()) {
    if (a.config.any_set()) throw UsageError("count: pass either --weights or configuration flags, not both");
    cfg = vtr::io::load_weights(a.weights).second;
  } else {
    cfg = a.config.resolve();
  }
  const auto full = vtr::count_params(cfg, vtr::ParamVariant::full);
  const auto comparable = vtr::count_params(cfg, vtr::ParamVariant::paper_comparable);
  const auto macs = vtr::count_macs(cfg);
  const auto selected = a.paper_comparable ? comparable : full;
  if (a.json) {
    json doc = {{"config", cfg.describe()},
                {"variant", a.paper_comparable ? "paper_comparable" : "full"},
                {"params", selected},
                {"params_full", full},
                {"params_paper_comparable", comparable},
                {"macs", macs}};
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "config: " << cfg.describe() << "\n"
              << "params: " << selected << " (" << human(selected) << ", "
              << (a.paper_comparable ? "paper-comparable" : "full") << ")\n"
              << "params (full): " << full << " (" << human(full) << ")\n"
              << "params (paper-comparable): " << comparable << " (" << human(comparable) << ")\n"
              << "macs: " << macs << " (" << human(macs) << ")\n";
  }
  return kOk;
}

struct ValidateArgs {
  std::string fixtures;
  bool json = false;
};

int run_validate(const ValidateArgs& a) {
  const auto report = vtr::validate_fixtures(a.fixtures);
  if (a.json) {
    json checks = json::array();
    for (const auto& c : report.checks) {
      checks.push_back({{"sample", c.sample}, {"check", c.check}, {"passed", c.passed}, {"detail", c.detail}});
    }
    std::cout << json{{"passed", report.passed()}, {"failures", report.failures()}, {"checks", checks}}.dump(2)
              << "\n";
  } else {
    std::cout << report.to_text();
  }
  return report.passed() ? kOk : kFailed;
}

struct BenchArgs {
  std::string weights, image;
  std::size_t iters = 10;
  std::size_t threads = 1;
  std::size_t warmup = 1;
  bool json = false;
};

int run_bench(const BenchArgs& a) {
  if (a.iters == 0) throw UsageError("bench: --iters must be at least 1");
  if (a.threads == 0) throw UsageError("bench: --threads must be at least 1");
  auto [w, cfg, img] = load_pair(a.weights, a.image);
  const auto r = vtr::run_bench(img, w, cfg, {a.iters, a.threads, a.warmup});
  if (a.json) {
    json doc = {{"config", cfg.describe()},     {"iters", a.iters},
                {"threads", a.threads},         {"samples", r.latencies.size()},
                {"min_s", r.min()},             {"median_s", r.median()},
                {"mean_s", r.mean()},           {"images_per_second", r.images_per_second()}};
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "config: " << cfg.describe() << "\n"
              << "samples: " << r.latencies.size() << " (" << a.threads << " thread(s) x " << a.iters << ")\n"
              << "min: " << fixed(r.min() * 1e3, 3) << " ms\n"
              << "median: " << fixed(r.median() * 1e3, 3) << " ms\n"
              << "mean: " << fixed(r.mean() * 1e3, 3) << " ms\n"
              << "throughput: " << fixed(r.images_per_second(), 2) << " images/s\n";
  }
  return kOk;
}

struct CompareArgs {
  std::string expected, actual, weights, image;
  double tolerance = 1e-4;
  bool json = false;
};

int run_compare(const CompareArgs& a) {
  const bool computed = !a.weights.empty() || !a.image.empty();
  if (computed == !a.actual.empty()) {
    throw UsageError("trace-compare: pass either --actual or both --weights and --image");
  }
  if (computed && (a.weights.empty() || a.image.empty())) {
    throw UsageError("trace-compare: --weights and --image go together");
  }
  const vtr::ActivationTrace expected = vtr::io::read_trace(a.expected);
  if (expected.entries().empty()) throw vtr::IoError("no trace files in '" + a.expected + "'");
  vtr::ActivationTrace actual;
  if (computed) {
    auto [w, cfg, img] = load_pair(a.weights, a.image);
    vtr::forward(img, w, cfg, &actual);
  } else {
    actual = vtr::io::read_trace(a.actual);
  }
  // Report in execution order when the expected bundle follows the stage grammar.
  vtr::ActivationTrace ordered;
  for (const auto& [name, m] : actual.entries())
    if (expected.find(name)) ordered.record(name, expected.at(name));
  for (const auto& [name, m] : expected.entries())
    if (!ordered.find(name)) ordered.record(name, m);

  const auto results = vtr::compare_traces(ordered, actual, a.tolerance);
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed;
  if (a.json) {
    json stages = json::array();
    for (const auto& r : results) {
      stages.push_back({{"stage", r.stage}, {"passed", r.passed}, {"error", r.error}, {"detail", r.detail}});
    }
    std::cout << json{{"passed", ok}, {"tolerance", a.tolerance}, {"stages", stages}}.dump(2) << "\n";
  } else {
    for (const auto& r : results) std::cout << (r.passed ? "PASS " : "FAIL ") << r.stage << " (" << r.detail << ")\n";
    for (const auto& r : results) {
      if (!r.passed) {
        std::cout << "first mismatch: " << r.stage << "\n";
        break;
      }
    }
  }
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vision transformer inference engine and accelerator simulator"};
  app.require_subcommand(1);

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Classify one image");
  infer_cmd->add_option("--weights", infer.weights, "VTRW weights file")->required();
  infer_cmd->add_option("--image", infer.image, "VTRT or PGM image")->required();
  infer_cmd->add_option("--trace", infer.trace, "Write every intermediate stage as VTRT files to this directory");
  infer_cmd->add_flag("--json", infer.json, "Machine-readable output");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run inference on the accelerator model and report cycles");
  sim_cmd->add_option("--weights", sim.weights, "VTRW weights file")->required();
  sim_cmd->add_option("--image", sim.image, "VTRT or PGM image")->required();
  sim.accel.add(sim_cmd);
  sim_cmd->add_flag("--json", sim.json, "Machine-readable output");

  CountArgs count;
  auto* count_cmd = app.add_subcommand("count", "Parameter and MAC counts for a configuration");
  count_cmd->add_option("--weights", count.weights, "Read the configuration from a VTRW file");
  count.config.add(count_cmd);
  count_cmd->add_flag("--paper-comparable", count.paper_comparable,
                      "Headline count excludes positional/class embeddings and Q/K/V biases");
  count_cmd->add_flag("--json", count.json, "Machine-readable output");

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Check the engine against golden fixtures");
  validate_cmd->add_option("--fixtures", validate.fixtures, "Fixture directory holding manifest.json")->required();
  validate_cmd->add_flag("--json", validate.json, "Machine-readable output");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Wall-clock latency of the inference engine");
  bench_cmd->add_option("--weights", bench.weights, "VTRW weights file")->required();
  bench_cmd->add_option("--image", bench.image, "VTRT or PGM image")->required();
  bench_cmd->add_option("--iters", bench.iters, "Timed forwards per thread")->capture_default_str();
  bench_cmd->add_option("--threads", bench.threads, "Worker threads sharing the weights")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed forwards per thread")->capture_default_str();
  bench_cmd->add_flag("--json", bench.json, "Machine-readable output");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("trace-compare", "Compare a trace bundle against a reference");
  compare_cmd->add_option("--expected", compare.expected, "Reference trace directory")->required();
  compare_cmd->add_option("--actual", compare.actual, "Trace directory to check");
  compare_cmd->add_option("--weights", compare.weights, "Compute the actual trace from these weights");
  compare_cmd->add_option("--image", compare.image, "... and this image");
  compare_cmd->add_option("--tolerance", compare.tolerance, "Max relative error per stage")->capture_default_str();
  compare_cmd->add_flag("--json", compare.json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*infer_cmd) return run_infer(infer);
    if (*sim_cmd) return run_simulate(sim);
    if (*count_cmd) return run_count(count);
    if (*validate_cmd) return run_validate(validate);
    if (*bench_cmd) return run_bench(bench);
    if (*compare_cmd) return run_compare(compare);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const vtr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
