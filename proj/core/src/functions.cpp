#include "nldpe/functions.hpp"

#include <cmath>
#include <stdexcept>

namespace nldpe {

namespace {

QuantSpec spec(double in_lo, double in_hi, double out_lo, double out_hi) {
  QuantSpec q;
  q.in_lo = in_lo;
  q.in_hi = in_hi;
  q.out_lo = out_lo;
  q.out_hi = out_hi;
  q.n_bits = 8;
  q.encoding = Encoding::Gray;
  return q;
}

std::vector<BuiltinFunction> make_builtins() {
  std::vector<BuiltinFunction> fns;
  fns.push_back({"identity", [](double x) { return x; }, spec(-1, 1, -1, 1), true});
  fns.push_back({"relu", [](double x) { return x > 0 ? x : 0.0; }, spec(-1, 1, 0, 1), true});
  fns.push_back({"sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                 spec(-8, 8, 0, 1), true});
  fns.push_back({"tanh", [](double x) { return std::tanh(x); }, spec(-8, 8, -1, 1), true});
  fns.push_back({"silu", [](double x) { return x / (1.0 + std::exp(-x)); },
                 spec(-8, 8, 0, 8), false});
  fns.push_back({"gelu",
                 [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); },
                 spec(-8, 8, 0, 8), false});
  // log excludes zero: domain starts one full-scale LSB above it
  const double log_lo = 1.0 / 256.0;
  fns.push_back({"log", [](double x) { return std::log(x); },
                 spec(log_lo, 1, std::log(log_lo), 0), true});
  fns.push_back({"exp", [](double x) { return std::exp(x); }, spec(-8, 0, 0, 1), true});
  return fns;
}

}  // namespace

const std::vector<BuiltinFunction>& builtin_functions() {
  static const std::vector<BuiltinFunction> fns = make_builtins();
  return fns;
}

const BuiltinFunction& builtin(const std::string& name) {
  for (const auto& f : builtin_functions())
    if (f.name == name) return f;
  throw std::invalid_argument("unknown built-in function: " + name);
}

bool has_builtin(const std::string& name) {
  for (const auto& f : builtin_functions())
    if (f.name == name) return true;
  return false;
}

}  // namespace nldpe
