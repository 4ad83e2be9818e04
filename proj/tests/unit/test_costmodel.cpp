#include "doctest.h"
#include "nldpe/acam.hpp"
#include "nldpe/config.hpp"
#include "nldpe/costmodel.hpp"
#include "nldpe/pipelines.hpp"
#include "oracles.hpp"

using namespace nldpe;

namespace {
NoiseSpec off() {
  NoiseSpec s = default_noise_spec();
  s.scale = 0.0;
  return s;
}
}  // namespace

TEST_SUITE("costmodel") {

TEST_CASE("empty run has an all-zero ledger") {
  RunLedger l;
  CHECK(l.empty());
  for (EventKind k : all_event_kinds()) CHECK(l.count(k) == 0);
}

TEST_CASE("one full-unit search bills 130 cells and 7 decodes") {
  auto c = compile_builtin("log");
  AcamUnit u = program_unit(c, off(), 1, 0.05, /*duplicate_spares=*/true);
  REQUIRE(u.enabled_cells() == 130);
  RunLedger l;
  SearchContext ctx;
  ctx.ledger = &l;
  eval_unit(u, 0.5, ctx);
  CHECK(l.count(EventKind::AcamCellSearch) == 130);
  CHECK(l.count(EventKind::XorDecode) == 7);
}

TEST_CASE("dot pipeline event counts follow the four-step structure") {
  LogExpUnits lu = make_logexp_units(off());
  RunLedger l;
  SearchContext ctx;
  ctx.ledger = &l;
  oracles::TestRng rng(3);
  std::vector<double> a(256), b(256);
  for (std::size_t i = 0; i < 256; ++i) {
    a[i] = rng.uniform(0.05, 1.0);
    b[i] = rng.uniform(0.05, 1.0);
  }
  dot_logexp(a, b, lu, ctx);
  // 2n log searches and n exp searches, in cell units
  CHECK(l.count(EventKind::AcamCellSearch) ==
        2 * 256 * lu.log_u.enabled_cells() + 256 * lu.exp_u.enabled_cells());
  // n multiply-adds plus the n-1 final reduction
  CHECK(l.count(EventKind::AdderOp) == 256 + 255);
  CHECK(l.count(EventKind::DacConversion) == 3 * 256);
}

TEST_CASE("energy: linear in counts, ACAM unit search is 130 x 0.44 fJ") {
  ComponentCosts costs = default_component_costs();
  RunLedger l;
  l.add(EventKind::AcamCellSearch, 130);
  l.add(EventKind::XorDecode, 7);
  EnergyReport r = energy_report(l, costs);
  double acam_pj = 0.0;
  for (const auto& line : r.lines)
    if (line.component == "acam") acam_pj = line.energy_pj;
  CHECK(acam_pj == doctest::Approx(130 * 0.00044));  // 57.2 fJ

  RunLedger doubled = l;
  doubled.merge(l);
  EnergyReport r2 = energy_report(doubled, costs);
  CHECK(r2.total_pj == doctest::Approx(2.0 * r.total_pj));

  double shares = 0.0;
  for (const auto& line : r2.lines) shares += line.share_percent;
  CHECK(shares == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("compute units dominate the attention pipeline energy") {
  oracles::TestRng rng(77);
  auto mat = [&](std::size_t r, std::size_t c, double lo, double hi) {
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
  };
  Matrix wq = mat(8, 8, -0.35, 0.35), wk = mat(8, 8, -0.35, 0.35), wv = mat(8, 8, -0.5, 0.5);
  Matrix xq = mat(4, 8, 0.0, 0.4), xk = mat(4, 8, 0.0, 0.4), xv = mat(4, 8, -0.6, 0.6);
  AttentionEngine eng = make_attention_engine(wq, wk, wv, 4, off(), 0x7000);
  RunLedger ledger;
  SearchContext ctx;
  ctx.ledger = &ledger;
  attention(eng, xq, xk, xv, true, ctx);
  EnergyReport report = energy_report(ledger, default_component_costs());
  double compute = 0.0;
  for (const auto& line : report.lines)
    if (line.component == "dpe" || line.component == "acam" || line.component == "adder")
      compute += line.energy_pj;
  CHECK(compute > 0.5 * report.total_pj);
}

TEST_CASE("ledger determinism across identical runs") {
  LogExpUnits lu = make_logexp_units(off());
  auto run = [&] {
    RunLedger l;
    SearchContext ctx;
    ctx.ledger = &l;
    std::vector<double> v = {0.3, 0.6, 0.9};
    dot_logexp(v, v, lu, ctx);
    return l;
  };
  RunLedger a = run(), b = run();
  CHECK(a.counters == b.counters);
}

TEST_CASE("unknown component lookups are rejected") {
  ComponentCosts costs = default_component_costs();
  CHECK_THROWS(static_cast<void>(costs.by_name("flux_capacitor")));
}

TEST_CASE("config roundtrip for quant and noise blocks") {
  QuantSpec q;
  q.in_lo = -8;
  q.in_hi = 8;
  q.out_lo = 0;
  q.out_hi = 1;
  q.n_bits = 8;
  q.encoding = Encoding::Gray;
  NoiseSpec n = default_noise_spec(1234);
  n.scale = 0.5;
  const std::string text = quant_to_config(q) + "\n" + noise_to_config(n);
  Config cfg = Config::parse(text);
  QuantSpec q2 = quant_from_config(cfg);
  NoiseSpec n2 = noise_from_config(cfg);
  CHECK(q2.in_lo == q.in_lo);
  CHECK(q2.encoding == q.encoding);
  CHECK(n2.seed == n.seed);
  CHECK(n2.scale == n.scale);
  CHECK(n2.prog.b == doctest::Approx(n.prog.b));
}

TEST_CASE("config parsing details") {
  Config cfg = Config::parse("# comment\n[a]\nx = 3\nflag = true\nname = \"hi\"\n[costs.dpe]\n"
                             "power_mw = 2.0\n");
  CHECK(cfg.get_int("a", "x", 0) == 3);
  CHECK(cfg.get_bool("a", "flag", false));
  CHECK(cfg.get_string("a", "name", "") == "hi");
  CHECK(cfg.get_double("a", "missing", 7.5) == 7.5);
  ComponentCosts costs = costs_from_config(cfg);
  CHECK(costs.by_name("dpe").power_mw == doctest::Approx(2.0));
  CHECK_THROWS(static_cast<void>(Config::parse("[bad\n")));
  CHECK_THROWS(static_cast<void>(Config::parse("novalue\n")));
}

}  // TEST_SUITE
