#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "vtr/accel.hpp"

namespace vtr::accel {

std::uint64_t SimReport::total_cycles() const {
  std::uint64_t c = 0;
  for (const auto& s : stages) c += s.cycles;
  return c;
}

std::uint64_t SimReport::cycles_on(Unit u) const {
  std::uint64_t c = 0;
  for (const auto& s : stages)
    if (s.unit == u) c += s.cycles;
  return c;
}

std::uint64_t SimReport::model_macs() const {
  std::uint64_t m = 0;
  for (const auto& s : stages)
    if (s.kind == StageKind::matmul) m += s.ops;
  return m;
}

double SimReport::latency_seconds() const { return static_cast<double>(total_cycles()) / accel.clock_hz; }

double SimReport::utilization() const {
  const auto cycles = total_cycles();
  if (cycles == 0) return 0.0;
  return static_cast<double>(analytic_macs) / (static_cast<double>(accel.lanes()) * static_cast<double>(cycles));
}

std::string SimReport::to_text() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "accelerator: p_h=%zu p_t=%zu p_c=%zu p_pe=%zu b=%zu clock=%.1f MHz cost=%s\n",
                accel.hcus, accel.pe_rows, accel.pe_cols, accel.pe_size, accel.block, accel.clock_hz / 1e6,
                std::string(to_string(accel.cost_model)).c_str());
  os << line;
  std::snprintf(line, sizeof line, "%-32s %-5s %-11s %12s %14s %14s\n", "stage", "unit", "kind", "cycles", "ops",
                "cum_latency_us");
  os << line;
  std::uint64_t cum = 0;
  for (const auto& s : stages) {
    cum += s.cycles;
    std::snprintf(line, sizeof line, "%-32s %-5s %-11s %12llu %14llu %14.3f\n", s.name.c_str(),
                  std::string(to_string(s.unit)).c_str(), std::string(to_string(s.kind)).c_str(),
                  static_cast<unsigned long long>(s.cycles), static_cast<unsigned long long>(s.ops),
                  static_cast<double>(cum) / accel.clock_hz * 1e6);
    os << line;
  }
  std::snprintf(line, sizeof line,
                "total cycles: %llu (HPPU %llu, ECU %llu)\nmodeled latency: %.6f ms\n"
                "lower bound: %.6f ms\nanalytic MACs: %llu\nutilization: %.4f\n",
                static_cast<unsigned long long>(total_cycles()), static_cast<unsigned long long>(cycles_on(Unit::hppu)),
                static_cast<unsigned long long>(cycles_on(Unit::ecu)), latency_seconds() * 1e3,
                lower_bound_seconds * 1e3, static_cast<unsigned long long>(analytic_macs), utilization());
  os << line;
  for (const auto& n : notes) os << "note: " << n << "\n";
  return os.str();
}

std::string SimReport::to_json(int indent) const {
  nlohmann::json j;
  j["accelerator"] = {{"p_h", accel.hcus},          {"p_t", accel.pe_rows},
                      {"p_c", accel.pe_cols},       {"p_pe", accel.pe_size},
                      {"block", accel.block},       {"clock_hz", accel.clock_hz},
                      {"cost_model", std::string(to_string(accel.cost_model))}};
  auto arr = nlohmann::json::array();
  std::uint64_t cum = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  for (const auto& s : stages) {
    cum += s.cycles;
    bytes_in += s.bytes_in;
    bytes_out += s.bytes_out;
    arr.push_back({{"stage", s.name},
                   {"unit", std::string(to_string(s.unit))},
                   {"kind", std::string(to_string(s.kind))},
                   {"cycles", s.cycles},
                   {"ops", s.ops},
                   {"bytes_in", s.bytes_in},
                   {"bytes_out", s.bytes_out},
                   {"cumulative_latency_s", static_cast<double>(cum) / accel.clock_hz}});
  }
  j["stages"] = std::move(arr);
  j["total_cycles"] = total_cycles();
  j["hppu_cycles"] = cycles_on(Unit::hppu);
  j["ecu_cycles"] = cycles_on(Unit::ecu);
  j["latency_s"] = latency_seconds();
  j["lower_bound_s"] = lower_bound_seconds;
  j["analytic_macs"] = analytic_macs;
  j["model_macs"] = model_macs();
  j["utilization"] = utilization();
  j["buffer_bytes_in"] = bytes_in;
  j["buffer_bytes_out"] = bytes_out;
  j["notes"] = notes;
  return j.dump(indent);
}

}  // namespace vtr::accel
