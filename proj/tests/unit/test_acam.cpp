#include <cmath>

#include "doctest.h"
#include "nldpe/acam.hpp"
#include "nldpe/functions.hpp"
#include "oracles.hpp"

using namespace nldpe;

namespace {

AcamUnit unit_for(const char* name, const NoiseSpec& spec, std::uint64_t image = 1) {
  return program_unit(compile_builtin(name), spec, image);
}

}  // namespace

TEST_SUITE("acam") {

TEST_CASE("unit provisioning: 130 cells, sizes 1,2,2,5,8,16,32,64") {
  const auto caps = unit_capacities(8);
  const std::vector<std::size_t> expected = {1, 2, 2, 5, 8, 16, 32, 64};
  CHECK(caps == expected);
  const NoiseSpec spec = default_noise_spec();
  AcamUnit u = unit_for("sigmoid", spec);
  CHECK(u.total_cells() == 130);
  CHECK(u.arrays.size() == 8);
}

TEST_CASE("3-bit sigmoid gray bit1 maps to a single row") {
  QuantSpec q;
  q.in_lo = -8;
  q.in_hi = 8;
  q.out_lo = 0;
  q.out_hi = 1;
  q.n_bits = 3;
  q.encoding = Encoding::Gray;
  auto c = compile_function(builtin("sigmoid").fn, q, "sigmoid3");
  const NoiseSpec spec = default_noise_spec();
  auto m = make_mapping(spec.acam_transfer, q.in_lo, q.in_hi);
  AcamArray a = map_intervals_to_array(c.bits[1], spec, m, 2);
  CHECK(a.enabled_rows() == 1);
}

TEST_CASE("empty interval set leaves the bit permanently zero") {
  const NoiseSpec spec = default_noise_spec();
  BitIntervalSet empty;
  empty.bit_index = 3;
  auto m = make_mapping(spec.acam_transfer, 0.0, 1.0);
  AcamArray a = map_intervals_to_array(empty, spec, m, 5);
  CHECK(a.enabled_rows() == 0);
  AcamUnit u;
  u.mapping = m;
  SearchContext ctx;
  for (double x : {0.0, 0.3, 0.99}) CHECK_FALSE(eval_bit(a, 0, x, u, ctx));
}

TEST_CASE("capacity exceeded is a mapping error naming the bit") {
  const NoiseSpec spec = default_noise_spec();
  BitIntervalSet big;
  big.bit_index = 0;
  for (int i = 0; i < 65; ++i)
    big.intervals.push_back({i / 65.0, i / 65.0 + 0.005});
  auto m = make_mapping(spec.acam_transfer, 0.0, 1.0);
  CHECK_THROWS_WITH(static_cast<void>(map_intervals_to_array(big, spec, m, 64)),
                    doctest::Contains("bit 0"));
}

TEST_CASE("stored thresholds recover through the transfer within 1e-6 relative") {
  const NoiseSpec spec = default_noise_spec();
  auto c = compile_builtin("sigmoid");
  AcamUnit u = program_unit(c, spec, 3);
  for (std::size_t slot = 0; slot < u.arrays.size(); ++slot) {
    const auto& ivs = c.bits[slot].intervals;
    std::size_t r = 0;
    for (const auto& iv : ivs) {
      const AcamCell& cell = u.arrays[slot].rows[r++].cells[0];
      if (iv.lo > c.qspec.in_lo) {
        const double back =
            u.mapping.from_threshold(conductance_to_threshold(cell.lo_g, u.mapping.transfer));
        CHECK(std::fabs(back - iv.lo) <=
              1e-6 * std::fmax(1.0, std::fabs(iv.lo)));
      }
      if (iv.hi < c.qspec.in_hi) {
        const double back =
            u.mapping.from_threshold(conductance_to_threshold(cell.hi_g, u.mapping.transfer));
        CHECK(std::fabs(back - iv.hi) <= 1e-6 * std::fmax(1.0, std::fabs(iv.hi)));
      }
    }
  }
}

TEST_CASE("multi-feature row match follows the stored ranges") {
  const NoiseSpec spec = default_noise_spec();
  auto m = make_mapping(spec.acam_transfer, 0.0, 4.0);
  auto cell = [&](double lo, double hi) {
    AcamCell c;
    c.wildcard = false;
    c.lo_g = m.bound_to_conductance(lo);
    c.hi_g = m.bound_to_conductance(hi);
    return c;
  };
  AcamCell wild;  // defaults to the full span

  // three-feature rows traced from a small decision tree; the last row is the
  // path that accepts (f0=2.4, f1=2.7, f2=3.2)
  AcamRow row0{{cell(0.1, 1.9), wild, wild}, true};
  AcamRow row1{{cell(1.9, 3.9), cell(0.1, 2.4), wild}, true};
  AcamRow row2{{cell(1.9, 3.9), cell(2.4, 3.9), cell(2.9, 3.9)}, true};

  auto th = [&](std::initializer_list<double> xs) {
    std::vector<double> out;
    for (double x : xs) out.push_back(m.to_threshold(x));
    return out;
  };
  const auto x = th({2.4, 2.7, 3.2});
  CHECK_FALSE(match_row(row0, x, m.transfer));
  CHECK_FALSE(match_row(row1, x, m.transfer));
  CHECK(match_row(row2, x, m.transfer));

  AcamRow all_wild{{wild, wild, wild}, true};
  CHECK(match_row(all_wild, th({0.2, 3.8, 1.0}), m.transfer));
  // any feature below its lower bound pulls the line down
  CHECK_FALSE(match_row(row2, th({1.0, 2.7, 3.2}), m.transfer));
  CHECK_THROWS(static_cast<void>(match_row(row2, th({1.0}), m.transfer)));
}

TEST_CASE("noise-free bit sweep equals interval membership") {
  const NoiseSpec spec = default_noise_spec();
  auto c = compile_builtin("tanh");
  AcamUnit u = program_unit(c, spec, 4);
  oracles::TestRng rng(5);
  SearchContext ctx;
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(c.qspec.in_lo, c.qspec.in_hi);
    for (std::size_t slot = 0; slot < u.arrays.size(); ++slot) {
      CHECK(eval_bit(u.arrays[slot], static_cast<std::uint32_t>(slot), x, u, ctx) ==
            c.bits[slot].contains(x));
    }
  }
}

TEST_CASE("noise-free unit equivalence with direct quantize, every builtin") {
  const NoiseSpec spec = default_noise_spec();
  oracles::TestRng rng(17);
  SearchContext ctx;
  for (const auto& f : builtin_functions()) {
    auto c = compile_builtin(f.name.c_str());
    AcamUnit u = program_unit(c, spec, 10 + static_cast<std::uint64_t>(f.name.size()));
    for (int i = 0; i < 10000; ++i) {
      const double x = rng.uniform(f.qspec.in_lo, f.qspec.in_hi);
      CHECK(eval_unit_level(u, x, ctx) == quantize_level(f.fn(x), c.qspec));
    }
  }
}

TEST_CASE("saturated tails and midpoints") {
  const NoiseSpec spec = default_noise_spec();
  SearchContext ctx;
  AcamUnit sig = unit_for("sigmoid", spec, 21);
  CHECK(eval_unit_level(sig, -8.0, ctx) == 0);
  AcamUnit th = unit_for("tanh", spec, 22);
  CHECK(eval_unit_level(th, 0.0, ctx) ==
        quantize_level(0.0, th.qspec));  // midpoint code
  AcamUnit id = unit_for("identity", spec, 23);
  CHECK(eval_unit_level(id, -1.0, ctx) == 0);  // all-zeros at the domain start
}

TEST_CASE("monotone gray functions occupy a single MSB row") {
  const NoiseSpec spec = default_noise_spec();
  for (const char* name : {"identity", "sigmoid", "tanh", "relu", "log", "exp"}) {
    AcamUnit u = unit_for(name, spec, 31);
    CHECK(u.arrays[0].enabled_rows() == 1);
  }
}

TEST_CASE("noisy searches are deterministic per seed and search index") {
  NoiseSpec spec = default_noise_spec(777);
  AcamUnit u = unit_for("sigmoid", spec, 40);
  SearchContext ctx;
  ctx.noise = &spec;
  std::vector<std::uint32_t> first;
  for (int i = 0; i < 500; ++i) {
    ctx.search_index = static_cast<std::uint64_t>(i);
    first.push_back(eval_unit_level(u, -2.0 + i * 0.008, ctx));
  }
  for (int i = 499; i >= 0; --i) {  // reversed order, same draws
    ctx.search_index = static_cast<std::uint64_t>(i);
    CHECK(eval_unit_level(u, -2.0 + i * 0.008, ctx) == first[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("duplicate-spares programming changes no outputs and fills the unit") {
  const NoiseSpec spec = default_noise_spec();
  auto c = compile_builtin("log");
  AcamUnit plain = program_unit(c, spec, 50);
  AcamUnit full = program_unit(c, spec, 50, 0.05, true);
  CHECK(full.enabled_cells() == 130);
  CHECK(plain.enabled_cells() < 130);
  SearchContext ctx;
  oracles::TestRng rng(3);
  for (int i = 0; i < 4000; ++i) {
    const double x = rng.uniform(c.qspec.in_lo, c.qspec.in_hi);
    CHECK(eval_unit_level(plain, x, ctx) == eval_unit_level(full, x, ctx));
  }
}

TEST_CASE("fault mitigation: remap to spare rows restores the pristine unit") {
  const NoiseSpec spec = default_noise_spec();
  auto c = compile_builtin("identity");
  AcamUnit pristine = program_unit(c, spec, 60);
  AcamUnit u = program_unit(c, spec, 60);

  // no faults: empty plan
  CHECK(mitigation_plan(u, {}).empty());

  // bit_4 slot (array index 3) holds 4 intervals in 5 rows: one spare
  FaultMap fm;
  fm.entries.push_back({SiteKey{60, 3, 1, 0, 0}, FaultMode::StuckLowG});
  inject_faults(u, fm);
  SearchContext ctx;
  bool corrupted = false;
  for (int i = 0; i <= 2000; ++i) {
    const double x = -1.0 + 2.0 * i / 2000.0;
    corrupted |= eval_unit_level(u, x, ctx) != eval_unit_level(pristine, x, ctx);
  }
  CHECK(corrupted);

  MitigationPlan plan = mitigation_plan(u, fm);
  CHECK(plan.remaps.size() == 1);
  CHECK(plan.remaps[0].array == 3);
  CHECK(plan.frozen_cells.size() == 1);
  apply_mitigation(u, plan);
  // byte-for-byte the pre-fault behavior, plus the quantize oracle at random x
  for (int i = 0; i <= 2000; ++i) {
    const double x = -1.0 + 2.0 * i / 2000.0;
    CHECK(eval_unit_level(u, x, ctx) == eval_unit_level(pristine, x, ctx));
  }
  oracles::TestRng rng(91);
  for (int i = 0; i < 5000; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    CHECK(eval_unit_level(u, x, ctx) == quantize_level(x, c.qspec));
  }
}

TEST_CASE("fault injection is idempotent and checked") {
  const NoiseSpec spec = default_noise_spec();
  AcamUnit u = unit_for("identity", spec, 61);
  FaultMap fm;
  fm.entries.push_back({SiteKey{61, 7, 2, 0, 1}, FaultMode::StuckHighG});
  inject_faults(u, fm);
  inject_faults(u, fm);
  CHECK(u.faults.entries.size() == 1);
  FaultMap bad;
  bad.entries.push_back({SiteKey{61, 12, 0, 0, 0}, FaultMode::StuckLowG});
  CHECK_THROWS_AS(inject_faults(u, bad), std::out_of_range);
}

TEST_CASE("exhausted spares are reported as unrecoverable") {
  const NoiseSpec spec = default_noise_spec();
  AcamUnit u = unit_for("identity", spec, 62);
  FaultMap fm;  // MSB array has exactly one row
  fm.entries.push_back({SiteKey{62, 0, 0, 0, 0}, FaultMode::StuckLowG});
  MitigationPlan plan = mitigation_plan(u, fm);
  CHECK(plan.remaps.empty());
  REQUIRE(plan.unrecoverable_bits.size() == 1);
  CHECK(plan.unrecoverable_bits[0] == 0);
}

}  // TEST_SUITE
