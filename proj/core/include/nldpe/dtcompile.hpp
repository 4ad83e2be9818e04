#pragma once

#include <string>
#include <vector>

#include "nldpe/codes.hpp"
#include "nldpe/functions.hpp"

namespace nldpe {

/// Closed interval [lo, hi] on the input axis.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// The x-regions where one encoded output bit equals 1. This is the canonical
/// form of the per-bit decision tree: one ACAM row per interval.
struct BitIntervalSet {
  int bit_index = 0;  // significance: n_bits-1 = MSB
  std::vector<Interval> intervals;  // disjoint, sorted ascending
  Encoding encoding = Encoding::Gray;

  bool contains(double x) const;
  std::size_t row_count() const { return intervals.size(); }
};

struct CompiledFunction {
  std::string name;
  QuantSpec qspec;
  std::vector<BitIntervalSet> bits;  // MSB first, size == n_bits
};

struct CompileOptions {
  std::size_t grid_points = 1u << 18;
};

/// Locates every toggle point of every encoded output bit with a dense grid
/// scan plus bisection down to adjacent doubles, so the interval bounds are
/// exact: for any representable x, interval membership equals the bit of
/// quantize(f(x)).
CompiledFunction compile_function(const ScalarFn& f, const QuantSpec& q,
                                  const std::string& name = "",
                                  const CompileOptions& opts = {});

CompiledFunction compile_builtin(const std::string& name, int n_bits = 8,
                                 Encoding enc = Encoding::Gray,
                                 const CompileOptions& opts = {});

/// Interval counts per bit, MSB first.
std::vector<std::size_t> row_counts(const CompiledFunction& c);

/// Evaluates the compiled interval sets at x (clamped to the domain); the
/// result is in the compiled encoding.
CodeWord eval_compiled(const CompiledFunction& c, double x);
std::uint32_t eval_compiled_level(const CompiledFunction& c, double x);  // binary level

/// Mean of (dequantize(eval_compiled(x)) - f(x))^2 over a uniform grid.
double compile_fixed_mse(const CompiledFunction& c, const ScalarFn& f,
                         std::size_t grid_points = 100000);

}  // namespace nldpe
