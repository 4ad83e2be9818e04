#include "nldpe/dtcompile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nldpe/parallel.hpp"

namespace nldpe {

namespace {

std::uint32_t encoded_code(double v, const QuantSpec& q) {
  std::uint32_t level = quantize_level(v, q);
  return q.encoding == Encoding::Gray ? binary_level_to_gray(level) : level;
}

/// Smallest representable x in (lo, hi] where the bit differs from bit(lo).
/// Requires bit(lo) != bit(hi).
double refine_toggle(const ScalarFn& f, const QuantSpec& q, int bit, double lo, double hi) {
  const std::uint32_t mask = 1u << bit;
  const std::uint32_t lo_bit = encoded_code(f(lo), q) & mask;
  while (true) {
    const double mid = lo + (hi - lo) * 0.5;
    if (mid <= lo || mid >= hi) break;  // adjacent doubles reached
    if ((encoded_code(f(mid), q) & mask) == lo_bit)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace

bool BitIntervalSet::contains(double x) const {
  auto it = std::upper_bound(intervals.begin(), intervals.end(), x,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  if (it == intervals.begin()) return false;
  --it;
  return x >= it->lo && x <= it->hi;
}

CompiledFunction compile_function(const ScalarFn& f, const QuantSpec& q,
                                  const std::string& name, const CompileOptions& opts) {
  q.validate();
  if (opts.grid_points < 2) throw std::invalid_argument("compile: grid too small");

  const std::size_t n = opts.grid_points;
  std::vector<double> xs(n);
  std::vector<std::uint32_t> codes(n);
  const double span = q.in_hi - q.in_lo;
  parallel_for(n, [&](std::size_t i) {
    double x = q.in_lo + span * (static_cast<double>(i) / static_cast<double>(n - 1));
    if (i == n - 1) x = q.in_hi;
    const double v = f(x);
    if (!std::isfinite(v)) {
      xs[i] = x;
      codes[i] = 0xffffffffu;  // marker checked below
      return;
    }
    xs[i] = x;
    codes[i] = encoded_code(v, q);
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (codes[i] == 0xffffffffu) {
      std::ostringstream os;
      os << "compile: function is non-finite at x=" << xs[i];
      throw std::domain_error(os.str());
    }
  }

  CompiledFunction c;
  c.name = name;
  c.qspec = q;
  c.bits.resize(static_cast<std::size_t>(q.n_bits));

  parallel_for(static_cast<std::size_t>(q.n_bits), [&](std::size_t slot) {
    const int bit = q.n_bits - 1 - static_cast<int>(slot);  // MSB first
    const std::uint32_t mask = 1u << bit;
    BitIntervalSet set;
    set.bit_index = bit;
    set.encoding = q.encoding;

    bool inside = (codes[0] & mask) != 0;
    double run_lo = q.in_lo;
    for (std::size_t i = 1; i < n; ++i) {
      const bool prev = (codes[i - 1] & mask) != 0;
      const bool cur = (codes[i] & mask) != 0;
      if (prev == cur) continue;
      const double t = refine_toggle(f, q, bit, xs[i - 1], xs[i]);
      if (cur) {
        run_lo = t;  // first x where the bit is 1
        inside = true;
      } else {
        // t is the first x where the bit is 0 again; close at the previous double
        set.intervals.push_back({run_lo, std::nextafter(t, run_lo)});
        inside = false;
      }
    }
    if (inside) set.intervals.push_back({run_lo, q.in_hi});
    c.bits[slot] = std::move(set);
  });
  return c;
}

CompiledFunction compile_builtin(const std::string& name, int n_bits, Encoding enc,
                                 const CompileOptions& opts) {
  const BuiltinFunction& b = builtin(name);
  QuantSpec q = b.qspec;
  q.n_bits = n_bits;
  q.encoding = enc;
  return compile_function(b.fn, q, name, opts);
}

std::vector<std::size_t> row_counts(const CompiledFunction& c) {
  std::vector<std::size_t> counts;
  counts.reserve(c.bits.size());
  for (const auto& b : c.bits) counts.push_back(b.row_count());
  return counts;
}

CodeWord eval_compiled(const CompiledFunction& c, double x) {
  const double xc = std::fmin(std::fmax(x, c.qspec.in_lo), c.qspec.in_hi);
  CodeWord w;
  w.encoding = c.qspec.encoding;
  w.bits.resize(c.bits.size());
  for (std::size_t i = 0; i < c.bits.size(); ++i)
    w.bits[i] = c.bits[i].contains(xc) ? 1 : 0;
  return w;
}

std::uint32_t eval_compiled_level(const CompiledFunction& c, double x) {
  const CodeWord w = eval_compiled(c, x);
  const std::uint32_t raw = code_to_level(w);
  return c.qspec.encoding == Encoding::Gray ? gray_level_to_binary(raw) : raw;
}

double compile_fixed_mse(const CompiledFunction& c, const ScalarFn& f,
                         std::size_t grid_points) {
  const double span = c.qspec.in_hi - c.qspec.in_lo;
  double acc = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x =
        c.qspec.in_lo + span * ((static_cast<double>(i) + 0.5) / static_cast<double>(grid_points));
    const double y = dequantize_level(eval_compiled_level(c, x), c.qspec);
    const double d = y - f(x);
    acc += d * d;
  }
  return acc / static_cast<double>(grid_points);
}

}  // namespace nldpe
