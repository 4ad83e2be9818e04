#include <cmath>

#include "doctest.h"
#include "nldpe/dtcompile.hpp"
#include "nldpe/functions.hpp"
#include "oracles.hpp"

using namespace nldpe;

TEST_SUITE("dtcompile") {

TEST_CASE("identity 8-bit gray row counts match the ramp oracle") {
  auto c = compile_builtin("identity");
  auto rc = row_counts(c);
  const std::vector<std::size_t> expected = {1, 1, 2, 4, 8, 16, 32, 64};
  CHECK(rc == expected);
  // independent run-count oracle over the integer ramp
  for (int bit = 7; bit >= 0; --bit)
    CHECK(rc[static_cast<std::size_t>(7 - bit)] == oracles::ramp_runs(bit, true, 0, 255));
}

TEST_CASE("constant function compiles to empty interval sets") {
  QuantSpec q;
  q.n_bits = 8;
  q.encoding = Encoding::Gray;
  auto c = compile_function([](double) { return 0.0; }, q, "zero");
  for (const auto& b : c.bits) CHECK(b.intervals.empty());
  CHECK(compile_fixed_mse(c, [](double) { return 0.0; }, 1000) == doctest::Approx(0.0));
}

TEST_CASE("sigmoid gray totals 128 on the saturating domain") {
  auto c = compile_builtin("sigmoid");
  std::size_t total = 0;
  for (auto n : row_counts(c)) total += n;
  CHECK(total == 128);
}

TEST_CASE("any monotone surjective function gives the gray ramp counts") {
  QuantSpec q;
  q.in_lo = -1;
  q.in_hi = 1;
  q.out_lo = -1;
  q.out_hi = 1;
  q.n_bits = 8;
  q.encoding = Encoding::Gray;
  auto c = compile_function([](double x) { return x * x * x; }, q, "cube");
  auto rc = row_counts(c);
  for (int bit = 7; bit >= 0; --bit)
    CHECK(rc[static_cast<std::size_t>(7 - bit)] == oracles::ramp_runs(bit, true, 0, 255));
}

TEST_CASE("binary LSB worst case stays within 2^(n-1)") {
  for (const auto& f : builtin_functions()) {
    QuantSpec q = f.qspec;
    q.encoding = Encoding::Binary;
    auto c = compile_function(f.fn, q, f.name);
    CHECK(c.bits.back().row_count() <= 128);
  }
}

TEST_CASE("gray halving for monotone builtins") {
  for (const auto& f : builtin_functions()) {
    if (!f.monotone) continue;
    QuantSpec qg = f.qspec;
    QuantSpec qb = f.qspec;
    qb.encoding = Encoding::Binary;
    auto cg = compile_function(f.fn, qg, f.name);
    auto cb = compile_function(f.fn, qb, f.name);
    auto g = row_counts(cg);
    auto b = row_counts(cb);
    for (std::size_t i = 1; i < g.size(); ++i) {  // all bits except the MSB
      CHECK(b[i] >= 2 * g[i] - 1);
      CHECK(b[i] <= 2 * g[i] + 1);
    }
  }
}

TEST_CASE("eval_compiled equals direct quantize") {
  oracles::TestRng rng(23);
  for (const char* name : {"identity", "sigmoid", "tanh", "log", "exp", "silu"}) {
    const auto& f = builtin(name);
    auto c = compile_builtin(name);
    for (int i = 0; i < 10000; ++i) {
      const double x = rng.uniform(f.qspec.in_lo, f.qspec.in_hi);
      CHECK(eval_compiled(c, x) == quantize(f.fn(x), c.qspec));
    }
  }
}

TEST_CASE("3-bit sigmoid bit1 toggle sits near the worked 1.28 threshold") {
  QuantSpec q;
  q.in_lo = -8;
  q.in_hi = 8;
  q.out_lo = 0;
  q.out_hi = 1;
  q.n_bits = 3;
  q.encoding = Encoding::Binary;
  const auto& f = builtin("sigmoid");
  auto c = compile_function(f.fn, q, "sigmoid3");
  // oracle: the exact level-5.5/7 crossing of the logistic
  const double x_t = std::log((5.5 / 7.0) / (1.0 - 5.5 / 7.0));
  CHECK(x_t == doctest::Approx(1.299).epsilon(0.01));
  auto bit1_at = [&](double x) { return eval_compiled(c, x).bits[1]; };
  CHECK(bit1_at(x_t + 1e-6) == 1);
  CHECK(bit1_at(x_t - 1e-6) == 0);
  // 2 rows in binary, 1 in gray for this bit
  CHECK(c.bits[1].row_count() == 2);
  QuantSpec qg = q;
  qg.encoding = Encoding::Gray;
  auto cg = compile_function(f.fn, qg, "sigmoid3g");
  CHECK(cg.bits[1].row_count() == 1);
}

TEST_CASE("identity MSE equals the uniform quantizer noise") {
  auto c = compile_builtin("identity");
  const double step = c.qspec.step();
  const double mse = compile_fixed_mse(c, builtin("identity").fn, 100000);
  CHECK(mse == doctest::Approx(step * step / 12.0).epsilon(0.05));
}

TEST_CASE("sigmoid 8-bit MSE small") {
  auto c = compile_builtin("sigmoid");
  CHECK(compile_fixed_mse(c, builtin("sigmoid").fn, 100000) <= 1e-5);
}

TEST_CASE("non-finite function rejected with the failing point named") {
  QuantSpec q;
  q.in_lo = -1;
  q.in_hi = 1;
  CHECK_THROWS_WITH_AS(
      compile_function([](double x) { return std::sqrt(x); }, q, "bad"),
      doctest::Contains("non-finite"), std::domain_error);
}

TEST_CASE("intervals are sorted, disjoint and within the domain") {
  for (const char* name : {"sigmoid", "silu", "log"}) {
    auto c = compile_builtin(name);
    for (const auto& b : c.bits) {
      for (std::size_t i = 0; i < b.intervals.size(); ++i) {
        CHECK(b.intervals[i].lo <= b.intervals[i].hi);
        CHECK(b.intervals[i].lo >= c.qspec.in_lo);
        CHECK(b.intervals[i].hi <= c.qspec.in_hi);
        if (i > 0) CHECK(b.intervals[i - 1].hi < b.intervals[i].lo);
      }
    }
  }
}

}  // TEST_SUITE
