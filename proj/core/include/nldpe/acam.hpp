#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nldpe/codes.hpp"
#include "nldpe/costmodel.hpp"
#include "nldpe/dtcompile.hpp"
#include "nldpe/noise.hpp"

namespace nldpe {

/// One ACAM cell: two RRAMs holding the lower and upper bound of the stored
/// range as conductances. A wildcard cell spans the full data-line range.
struct AcamCell {
  double lo_g = kGMin;
  double hi_g = kGMax;
  bool wildcard = true;
};

struct AcamRow {
  std::vector<AcamCell> cells;
  bool enabled = false;
};

struct AcamArray {
  std::vector<AcamRow> rows;
  std::size_t cols = 1;

  std::size_t enabled_rows() const;
  std::size_t cell_count() const { return rows.size() * cols; }
};

/// Affine map between a function domain and the threshold window the ACAM
/// compares in. The window sits inside [TH(g_min), TH(g_max)] with a guard
/// margin so domain-edge bounds keep headroom under noise.
struct AcamMapping {
  TransferParams transfer;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  double th_lo = 0.0;  // threshold corresponding to domain_lo
  double th_hi = 1.0;  // threshold corresponding to domain_hi

  double to_threshold(double x) const {
    return th_lo + (x - domain_lo) / (domain_hi - domain_lo) * (th_hi - th_lo);
  }
  double from_threshold(double th) const {
    return domain_lo + (th - th_lo) / (th_hi - th_lo) * (domain_hi - domain_lo);
  }
  double bound_to_conductance(double x) const {
    return threshold_to_conductance(to_threshold(x), transfer);
  }
};

AcamMapping make_mapping(const TransferParams& t, double domain_lo, double domain_hi,
                         double margin = 0.05);

/// Per-bit row capacities of one ACAM unit, MSB first. The 8-bit unit uses the
/// provisioned sizes 1,2,2,5,8,16,32,64 (130 cells total).
std::vector<std::size_t> unit_capacities(int n_bits);

struct AcamUnit {
  std::vector<AcamArray> arrays;  // MSB first, one per output bit
  QuantSpec qspec;
  AcamMapping mapping;
  std::string function;  // name of the compiled function this unit realizes
  std::uint64_t image_id = 0;
  FaultMap faults;

  std::size_t total_cells() const;
  std::size_t enabled_cells() const;
};

/// Maps a compiled bit onto array rows: one row per interval, bounds inverted
/// through the transfer to target conductances, spare rows disabled. Bounds at
/// the domain edges store the conductance rail (wildcard-side semantics).
/// Throws if the interval count exceeds `capacity`.
AcamArray map_intervals_to_array(const BitIntervalSet& s, const NoiseSpec& spec,
                                 const AcamMapping& m, std::size_t capacity);

/// duplicate_spares programs unused rows as copies of their bit's widest
/// interval; a duplicate never changes the OR result but adds match-line
/// redundancy, and fills the unit to its full 130 searched cells.
AcamUnit program_unit(const CompiledFunction& c, const NoiseSpec& spec,
                      std::uint64_t image_id = 0, double margin = 0.05,
                      bool duplicate_spares = false);

/// Generic multi-feature row match: true iff every non-wildcard cell's stored
/// range contains the corresponding input (threshold units).
bool match_row(const AcamRow& row, std::span<const double> x_th, const TransferParams& t);

struct SearchContext {
  const NoiseSpec* noise = nullptr;   // nullptr or scale 0 = noise-free
  std::uint64_t search_index = 0;
  RunLedger* ledger = nullptr;        // optional event counting
};

/// OR over the match lines of a single-feature array.
bool eval_bit(const AcamArray& a, std::uint32_t array_index, double x, const AcamUnit& u,
              const SearchContext& ctx);

/// Full unit search: per-array bits (Gray), then XOR decode to binary.
CodeWord eval_unit(const AcamUnit& u, double x, const SearchContext& ctx);
std::uint32_t eval_unit_level(const AcamUnit& u, double x, const SearchContext& ctx);

/// Pins the listed cells; pins survive any later reprogramming of the unit.
void inject_faults(AcamUnit& u, const FaultMap& fm);

struct RowRemap {
  std::uint32_t array = 0;
  std::uint32_t from_row = 0;
  std::uint32_t to_row = 0;
};

struct MitigationPlan {
  std::vector<RowRemap> remaps;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> disabled;  // (array, row)
  std::vector<SiteKey> frozen_cells;      // never updated during fine-tuning
  std::vector<std::uint32_t> unrecoverable_bits;  // array indices out of spare rows

  bool empty() const {
    return remaps.empty() && disabled.empty() && frozen_cells.empty() &&
           unrecoverable_bits.empty();
  }
};

/// Pre-deployment fault plan: move intervals on faulted rows to spare rows,
/// disable the faulted ones, freeze stuck cells for fine-tuning.
MitigationPlan mitigation_plan(const AcamUnit& u, const FaultMap& fm);

void apply_mitigation(AcamUnit& u, const MitigationPlan& plan);

}  // namespace nldpe
