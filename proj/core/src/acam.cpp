#include "nldpe/acam.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nldpe {

std::size_t AcamArray::enabled_rows() const {
  std::size_t n = 0;
  for (const auto& r : rows)
    if (r.enabled) ++n;
  return n;
}

namespace {

/// Conductance whose realized threshold lands on the closed side of the
/// stored bound, so an input exactly at the bound always matches.
double bound_conductance(const AcamMapping& m, double x, bool is_lo) {
  double g = threshold_to_conductance(m.to_threshold(x), m.transfer);
  const double target = m.to_threshold(x);
  for (int i = 0; i < 8; ++i) {
    const double th = conductance_to_threshold(g, m.transfer);
    if (is_lo ? th <= target : th >= target) break;
    g = std::nextafter(g, is_lo ? 0.0 : 2.0 * kGMax);
  }
  return g;
}

}  // namespace

AcamMapping make_mapping(const TransferParams& t, double domain_lo, double domain_hi,
                         double margin) {
  if (!(domain_lo < domain_hi)) throw std::invalid_argument("make_mapping: empty domain");
  const double th_min = conductance_to_threshold(kGMin, t);
  const double th_max = conductance_to_threshold(kGMax, t);
  const double guard = (th_max - th_min) * margin;
  AcamMapping m;
  m.transfer = t;
  m.domain_lo = domain_lo;
  m.domain_hi = domain_hi;
  m.th_lo = th_min + guard;
  m.th_hi = th_max - guard;
  return m;
}

std::vector<std::size_t> unit_capacities(int n_bits) {
  if (n_bits == 8) return {1, 2, 2, 5, 8, 16, 32, 64};
  std::vector<std::size_t> caps(static_cast<std::size_t>(n_bits));
  caps[0] = 1;
  for (int i = 1; i < n_bits; ++i) caps[static_cast<std::size_t>(i)] = 1u << (i - 1);
  return caps;
}

std::size_t AcamUnit::total_cells() const {
  std::size_t n = 0;
  for (const auto& a : arrays) n += a.cell_count();
  return n;
}

std::size_t AcamUnit::enabled_cells() const {
  std::size_t n = 0;
  for (const auto& a : arrays) n += a.enabled_rows() * a.cols;
  return n;
}

AcamArray map_intervals_to_array(const BitIntervalSet& s, const NoiseSpec& spec,
                                 const AcamMapping& m, std::size_t capacity) {
  if (s.intervals.size() > capacity) {
    std::ostringstream os;
    os << "acam: bit " << s.bit_index << " needs " << s.intervals.size()
       << " rows but the array has " << capacity;
    throw std::runtime_error(os.str());
  }
  (void)spec;  // transfer parameters already baked into the mapping
  AcamArray a;
  a.cols = 1;
  a.rows.resize(capacity);
  for (std::size_t r = 0; r < capacity; ++r) {
    a.rows[r].cells.assign(1, AcamCell{});
    a.rows[r].enabled = false;
  }
  for (std::size_t r = 0; r < s.intervals.size(); ++r) {
    const Interval& iv = s.intervals[r];
    AcamCell cell;
    cell.wildcard = false;
    // Domain-edge bounds sit on the conductance rails; the mapping margin
    // keeps the corresponding thresholds outside the data-line window.
    cell.lo_g = iv.lo <= m.domain_lo ? kGMin : bound_conductance(m, iv.lo, true);
    cell.hi_g = iv.hi >= m.domain_hi ? kGMax : bound_conductance(m, iv.hi, false);
    a.rows[r].cells[0] = cell;
    a.rows[r].enabled = true;
  }
  return a;
}

AcamUnit program_unit(const CompiledFunction& c, const NoiseSpec& spec,
                      std::uint64_t image_id, double margin, bool duplicate_spares) {
  AcamUnit u;
  u.qspec = c.qspec;
  u.mapping = make_mapping(spec.acam_transfer, c.qspec.in_lo, c.qspec.in_hi, margin);
  u.function = c.name;
  u.image_id = image_id;
  const auto caps = unit_capacities(c.qspec.n_bits);
  u.arrays.reserve(c.bits.size());
  for (std::size_t i = 0; i < c.bits.size(); ++i) {
    AcamArray a = map_intervals_to_array(c.bits[i], spec, u.mapping, caps[i]);
    if (duplicate_spares && !c.bits[i].intervals.empty()) {
      // copy of the widest stored interval; OR-redundant
      std::size_t widest = 0;
      for (std::size_t r = 1; r < c.bits[i].intervals.size(); ++r) {
        const auto& iv = c.bits[i].intervals[r];
        const auto& best = c.bits[i].intervals[widest];
        if (iv.hi - iv.lo > best.hi - best.lo) widest = r;
      }
      for (auto& row : a.rows) {
        if (row.enabled) continue;
        row.cells = a.rows[widest].cells;
        row.enabled = true;
      }
    }
    u.arrays.push_back(std::move(a));
  }
  return u;
}

bool match_row(const AcamRow& row, std::span<const double> x_th, const TransferParams& t) {
  if (row.cells.size() != x_th.size())
    throw std::invalid_argument("match_row: input width does not match row");
  for (std::size_t j = 0; j < row.cells.size(); ++j) {
    const AcamCell& cell = row.cells[j];
    if (cell.wildcard) continue;
    const double lo = conductance_to_threshold(cell.lo_g, t);
    const double hi = conductance_to_threshold(cell.hi_g, t);
    if (x_th[j] < lo || x_th[j] > hi) return false;
  }
  return true;
}

namespace {

double cell_threshold(const AcamUnit& u, std::uint32_t array, std::uint32_t row,
                      std::uint32_t element, double g_target, const SearchContext& ctx) {
  double g = g_target;
  const double pin = u.faults.pinned(u.image_id, array, row, 0, element);
  if (pin >= 0.0) {
    g = pin;
  } else if (ctx.noise != nullptr && ctx.noise->enabled()) {
    SiteKey site{u.image_id, array, row, 0, element};
    g = sample_conductance(g_target, *ctx.noise, site, ctx.search_index);
  }
  return conductance_to_threshold(g, u.mapping.transfer);
}

}  // namespace

bool eval_bit(const AcamArray& a, std::uint32_t array_index, double x, const AcamUnit& u,
              const SearchContext& ctx) {
  const double x_th = u.mapping.to_threshold(x);
  for (std::uint32_t r = 0; r < a.rows.size(); ++r) {
    const AcamRow& row = a.rows[r];
    if (!row.enabled) continue;  // pre-charge skipped
    const AcamCell& cell = row.cells[0];
    if (cell.wildcard) return true;
    const double lo = cell_threshold(u, array_index, r, 0, cell.lo_g, ctx);
    const double hi = cell_threshold(u, array_index, r, 1, cell.hi_g, ctx);
    if (x_th >= lo && x_th <= hi) return true;
  }
  return false;
}

CodeWord eval_unit(const AcamUnit& u, double x, const SearchContext& ctx) {
  const double xc = std::fmin(std::fmax(x, u.qspec.in_lo), u.qspec.in_hi);
  CodeWord w;
  w.encoding = u.qspec.encoding;
  w.bits.resize(u.arrays.size());
  for (std::size_t i = 0; i < u.arrays.size(); ++i)
    w.bits[i] = eval_bit(u.arrays[i], static_cast<std::uint32_t>(i), xc, u, ctx) ? 1 : 0;
  if (ctx.ledger != nullptr) {
    ctx.ledger->add(EventKind::AcamCellSearch, u.enabled_cells());
    if (u.qspec.encoding == Encoding::Gray && u.qspec.n_bits > 1)
      ctx.ledger->add(EventKind::XorDecode, static_cast<std::uint64_t>(u.qspec.n_bits - 1));
  }
  if (u.qspec.encoding == Encoding::Gray) return gray_to_binary(w);
  return w;
}

std::uint32_t eval_unit_level(const AcamUnit& u, double x, const SearchContext& ctx) {
  return code_to_level(eval_unit(u, x, ctx));
}

void inject_faults(AcamUnit& u, const FaultMap& fm) {
  for (const auto& e : fm.entries) {
    if (e.site.image != u.image_id) continue;
    if (e.site.array >= u.arrays.size())
      throw std::out_of_range("inject_faults: array index out of range");
    if (e.site.row >= u.arrays[e.site.array].rows.size())
      throw std::out_of_range("inject_faults: row index out of range");
    bool dup = false;
    for (const auto& have : u.faults.entries)
      dup |= have.site.image == e.site.image && have.site.array == e.site.array &&
             have.site.row == e.site.row && have.site.col == e.site.col &&
             have.site.element == e.site.element;
    if (!dup) u.faults.entries.push_back(e);
  }
}

MitigationPlan mitigation_plan(const AcamUnit& u, const FaultMap& fm) {
  MitigationPlan plan;
  for (std::uint32_t ai = 0; ai < u.arrays.size(); ++ai) {
    const AcamArray& a = u.arrays[ai];
    std::vector<bool> row_faulted(a.rows.size(), false);
    for (const auto& e : fm.entries) {
      if (e.site.image == u.image_id && e.site.array == ai && e.site.row < a.rows.size())
        row_faulted[e.site.row] = true;
    }
    std::vector<std::uint32_t> spares;
    for (std::uint32_t r = 0; r < a.rows.size(); ++r)
      if (!a.rows[r].enabled && !row_faulted[r]) spares.push_back(r);

    bool exhausted = false;
    for (std::uint32_t r = 0; r < a.rows.size(); ++r) {
      if (!row_faulted[r]) continue;
      if (a.rows[r].enabled) {
        if (!spares.empty()) {
          plan.remaps.push_back({ai, r, spares.back()});
          spares.pop_back();
        } else {
          exhausted = true;
        }
        plan.disabled.emplace_back(ai, r);
      }
      for (const auto& e : fm.entries) {
        if (e.site.image == u.image_id && e.site.array == ai && e.site.row == r)
          plan.frozen_cells.push_back(e.site);
      }
    }
    if (exhausted) plan.unrecoverable_bits.push_back(ai);
  }
  return plan;
}

void apply_mitigation(AcamUnit& u, const MitigationPlan& plan) {
  for (const auto& rm : plan.remaps) {
    AcamArray& a = u.arrays[rm.array];
    a.rows[rm.to_row].cells = a.rows[rm.from_row].cells;
    a.rows[rm.to_row].enabled = true;
  }
  for (const auto& [ai, r] : plan.disabled) u.arrays[ai].rows[r].enabled = false;
}

}  // namespace nldpe
