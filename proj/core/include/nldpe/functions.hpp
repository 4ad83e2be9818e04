#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nldpe/codes.hpp"

namespace nldpe {

using ScalarFn = std::function<double(double)>;

/// A named scalar function together with its default quantization spec.
struct BuiltinFunction {
  std::string name;
  ScalarFn fn;
  QuantSpec qspec;     // default domain/codomain, 8-bit Gray
  bool monotone = true;
};

/// Registry of the built-in activation/arithmetic functions.
/// Domains saturate the codomain tails so the full level range is swept;
/// SiLU/GELU clamp the shallow negative well to a [0, hi] codomain so the
/// per-bit interval counts fit the ACAM row budget.
const std::vector<BuiltinFunction>& builtin_functions();

const BuiltinFunction& builtin(const std::string& name);  // throws if unknown
bool has_builtin(const std::string& name);

}  // namespace nldpe
