#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nldpe {

enum class EventKind {
  CrossbarColumnRead,
  AcamCellSearch,
  DacConversion,
  XorDecode,
  AdderOp,
  InputBufferAccess,
  OutputBufferAccess,
  RegisterAccess,
  SharedMemoryAccess,
};

const std::vector<EventKind>& all_event_kinds();
std::string to_string(EventKind k);

/// Event counters for one simulated run. Deterministic given the pipeline and
/// shapes; workers keep private ledgers and merge at the end of a run.
struct RunLedger {
  std::map<EventKind, std::uint64_t> counters;

  void add(EventKind k, std::uint64_t n = 1) { counters[k] += n; }
  std::uint64_t count(EventKind k) const;
  void merge(const RunLedger& other);
  bool empty() const;
};

/// Per-component cost figures. Per-event energy defaults to power/clock at
/// 1 GHz; the ACAM entry is overridden by the measured per-search figure.
struct ComponentCost {
  std::string name;
  double power_mw = 0.0;
  double area_mm2 = 0.0;
  double energy_per_event_pj = 0.0;
};

struct ComponentCosts {
  std::vector<ComponentCost> components;

  const ComponentCost& by_name(const std::string& name) const;
  void validate() const;  // all figures non-negative
};

/// Architecture figures: per-core DPE/ACAM/DAC/XOR/buffers/registers plus the
/// tile-level adders and shared memory, per-event energies derived at 1 GHz
/// and scaled by the per-core instance counts.
ComponentCosts default_component_costs();

/// Which component an event bills to.
std::string component_for_event(EventKind k);

struct EnergyLine {
  std::string component;
  std::uint64_t events = 0;
  double energy_pj = 0.0;
  double share_percent = 0.0;
};

struct EnergyReport {
  std::vector<EnergyLine> lines;
  double total_pj = 0.0;
};

EnergyReport energy_report(const RunLedger& l, const ComponentCosts& c);

std::string energy_report_csv(const EnergyReport& r);
std::string ledger_csv(const RunLedger& l);

}  // namespace nldpe
