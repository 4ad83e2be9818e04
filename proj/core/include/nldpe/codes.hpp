#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nldpe {

enum class Encoding { Binary, Gray };

std::string to_string(Encoding e);
Encoding encoding_from_string(const std::string& s);

/// Fixed-point mapping between a real input domain and an n-bit output code.
/// Levels are uniform over [out_lo, out_hi]; quantize rounds half to even.
struct QuantSpec {
  double in_lo = 0.0;
  double in_hi = 1.0;
  double out_lo = 0.0;
  double out_hi = 1.0;
  int n_bits = 8;
  Encoding encoding = Encoding::Gray;

  std::uint32_t levels() const { return 1u << n_bits; }
  std::uint32_t max_level() const { return levels() - 1; }
  double step() const { return (out_hi - out_lo) / static_cast<double>(max_level()); }
  void validate() const;  // throws std::invalid_argument on bad bounds/bits
};

/// An n-bit code, MSB first.
struct CodeWord {
  std::vector<std::uint8_t> bits;  // each 0 or 1, bits[0] is the MSB
  Encoding encoding = Encoding::Binary;

  std::size_t size() const { return bits.size(); }
  bool operator==(const CodeWord&) const = default;
  std::string to_string() const;  // e.g. "101" MSB first
};

// Level <-> code plumbing. Levels are plain unsigned integers.
std::uint32_t binary_level_to_gray(std::uint32_t level);
std::uint32_t gray_level_to_binary(std::uint32_t gray);
CodeWord level_to_code(std::uint32_t level, int n_bits, Encoding enc);
std::uint32_t code_to_level(const CodeWord& c);  // level in the code's own encoding

/// Nearest level index for v under q, round half to even, clamped to [0, 2^n - 1].
std::uint32_t quantize_level(double v, const QuantSpec& q);

CodeWord quantize(double v, const QuantSpec& q);
double dequantize(const CodeWord& c, const QuantSpec& q);
double dequantize_level(std::uint32_t binary_level, const QuantSpec& q);

CodeWord binary_to_gray(const CodeWord& b);
CodeWord gray_to_binary(const CodeWord& g);

}  // namespace nldpe
