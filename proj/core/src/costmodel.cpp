#include "nldpe/costmodel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nldpe {

const std::vector<EventKind>& all_event_kinds() {
  static const std::vector<EventKind> kinds = {
      EventKind::CrossbarColumnRead, EventKind::AcamCellSearch, EventKind::DacConversion,
      EventKind::XorDecode,          EventKind::AdderOp,        EventKind::InputBufferAccess,
      EventKind::OutputBufferAccess, EventKind::RegisterAccess, EventKind::SharedMemoryAccess};
  return kinds;
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::CrossbarColumnRead: return "crossbar_column_read";
    case EventKind::AcamCellSearch: return "acam_cell_search";
    case EventKind::DacConversion: return "dac_conversion";
    case EventKind::XorDecode: return "xor_decode";
    case EventKind::AdderOp: return "adder_op";
    case EventKind::InputBufferAccess: return "input_buffer_access";
    case EventKind::OutputBufferAccess: return "output_buffer_access";
    case EventKind::RegisterAccess: return "register_access";
    case EventKind::SharedMemoryAccess: return "shared_memory_access";
  }
  return "unknown";
}

std::uint64_t RunLedger::count(EventKind k) const {
  auto it = counters.find(k);
  return it == counters.end() ? 0 : it->second;
}

void RunLedger::merge(const RunLedger& other) {
  for (const auto& [k, n] : other.counters) counters[k] += n;
}

bool RunLedger::empty() const {
  for (const auto& [k, n] : counters)
    if (n > 0) return false;
  return true;
}

const ComponentCost& ComponentCosts::by_name(const std::string& name) const {
  for (const auto& c : components)
    if (c.name == name) return c;
  throw std::out_of_range("unknown cost component: " + name);
}

void ComponentCosts::validate() const {
  for (const auto& c : components) {
    if (c.power_mw < 0 || c.area_mm2 < 0 || c.energy_per_event_pj < 0)
      throw std::invalid_argument("component cost must be non-negative: " + c.name);
  }
}

ComponentCosts default_component_costs() {
  // power (mW) and area (mm^2) per core/tile block at 1 GHz; per-event energy
  // = power / (instances * 1 GHz), in pJ. ACAM uses the measured 0.44 fJ/search
  // per cell instead of the power-derived figure.
  ComponentCosts cc;
  auto add = [&cc](std::string name, double power, double area, double instances,
                   double override_pj = -1.0) {
    ComponentCost c;
    c.name = std::move(name);
    c.power_mw = power;
    c.area_mm2 = area;
    c.energy_per_event_pj = override_pj >= 0.0 ? override_pj : power / instances;
    cc.components.push_back(c);
  };
  add("dpe", 1.31, 0.011534, 4 * 256.0);           // per column read
  add("acam", 43.52, 0.041431, 256.0, 0.00044);    // per cell search
  add("dac", 4.0, 0.00017, 4 * 256.0);             // per conversion
  add("xor", 0.385, 0.000215, 7 * 256.0);          // per decode
  add("adder", 12.8, 0.0154, 256.0);               // per op
  add("input_buffer", 0.23, 0.00077, 256.0);       // per access
  add("output_buffer", 0.23, 0.00077, 256.0);      // per access
  add("register", 0.12 + 0.69, 0.000385 + 0.00231, 256.0);
  add("shared_memory", 20.7, 0.083, 256.0);
  cc.validate();
  return cc;
}

std::string component_for_event(EventKind k) {
  switch (k) {
    case EventKind::CrossbarColumnRead: return "dpe";
    case EventKind::AcamCellSearch: return "acam";
    case EventKind::DacConversion: return "dac";
    case EventKind::XorDecode: return "xor";
    case EventKind::AdderOp: return "adder";
    case EventKind::InputBufferAccess: return "input_buffer";
    case EventKind::OutputBufferAccess: return "output_buffer";
    case EventKind::RegisterAccess: return "register";
    case EventKind::SharedMemoryAccess: return "shared_memory";
  }
  throw std::invalid_argument("unknown event kind");
}

EnergyReport energy_report(const RunLedger& l, const ComponentCosts& c) {
  EnergyReport r;
  for (const auto& [kind, n] : l.counters) {
    const std::string comp = component_for_event(kind);
    const double e = static_cast<double>(n) * c.by_name(comp).energy_per_event_pj;
    bool merged = false;
    for (auto& line : r.lines) {
      if (line.component == comp) {
        line.events += n;
        line.energy_pj += e;
        merged = true;
        break;
      }
    }
    if (!merged) r.lines.push_back({comp, n, e, 0.0});
    r.total_pj += e;
  }
  for (auto& line : r.lines)
    line.share_percent = r.total_pj > 0 ? 100.0 * line.energy_pj / r.total_pj : 0.0;
  return r;
}

std::string energy_report_csv(const EnergyReport& r) {
  std::ostringstream os;
  os << "component,events,energy_pj,share_percent\n";
  char buf[160];
  for (const auto& line : r.lines) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%.9g,%.4f\n", line.component.c_str(),
                  static_cast<unsigned long long>(line.events), line.energy_pj,
                  line.share_percent);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "total,,%.9g,100.0000\n", r.total_pj);
  os << buf;
  return os.str();
}

std::string ledger_csv(const RunLedger& l) {
  std::ostringstream os;
  os << "event,count\n";
  for (EventKind k : all_event_kinds())
    os << to_string(k) << ',' << l.count(k) << '\n';
  return os.str();
}

}  // namespace nldpe
