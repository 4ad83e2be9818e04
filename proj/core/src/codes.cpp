#include "nldpe/codes.hpp"

#include <cmath>
#include <stdexcept>

namespace nldpe {

std::string to_string(Encoding e) {
  return e == Encoding::Binary ? "binary" : "gray";
}

Encoding encoding_from_string(const std::string& s) {
  if (s == "binary" || s == "Binary" || s == "B") return Encoding::Binary;
  if (s == "gray" || s == "Gray" || s == "G") return Encoding::Gray;
  throw std::invalid_argument("unknown encoding: " + s);
}

void QuantSpec::validate() const {
  if (!(in_lo < in_hi)) throw std::invalid_argument("QuantSpec: in_lo must be < in_hi");
  if (!(out_lo < out_hi)) throw std::invalid_argument("QuantSpec: out_lo must be < out_hi");
  if (n_bits < 1 || n_bits > 16) throw std::invalid_argument("QuantSpec: n_bits must be in [1,16]");
}

std::string CodeWord::to_string() const {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::uint32_t binary_level_to_gray(std::uint32_t level) { return level ^ (level >> 1); }

std::uint32_t gray_level_to_binary(std::uint32_t gray) {
  std::uint32_t level = gray;
  for (std::uint32_t shift = 1; shift < 32; shift <<= 1) level ^= level >> shift;
  return level;
}

CodeWord level_to_code(std::uint32_t level, int n_bits, Encoding enc) {
  std::uint32_t v = enc == Encoding::Gray ? binary_level_to_gray(level) : level;
  CodeWord c;
  c.encoding = enc;
  c.bits.resize(static_cast<std::size_t>(n_bits));
  for (int i = 0; i < n_bits; ++i)
    c.bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> (n_bits - 1 - i)) & 1u);
  return c;
}

std::uint32_t code_to_level(const CodeWord& c) {
  std::uint32_t v = 0;
  for (auto b : c.bits) v = (v << 1) | (b & 1u);
  return v;
}

std::uint32_t quantize_level(double v, const QuantSpec& q) {
  q.validate();
  if (!std::isfinite(v)) throw std::domain_error("quantize: non-finite value");
  const double clamped = std::fmin(std::fmax(v, q.out_lo), q.out_hi);
  const double x = (clamped - q.out_lo) / (q.out_hi - q.out_lo) * q.max_level();
  // round half to even
  const double fl = std::floor(x);
  const double frac = x - fl;
  double r;
  if (frac > 0.5) {
    r = fl + 1.0;
  } else if (frac < 0.5) {
    r = fl;
  } else {
    r = (std::fmod(fl, 2.0) == 0.0) ? fl : fl + 1.0;
  }
  if (r < 0.0) r = 0.0;
  if (r > q.max_level()) r = q.max_level();
  return static_cast<std::uint32_t>(r);
}

CodeWord quantize(double v, const QuantSpec& q) {
  return level_to_code(quantize_level(v, q), q.n_bits, q.encoding);
}

double dequantize_level(std::uint32_t binary_level, const QuantSpec& q) {
  return q.out_lo + static_cast<double>(binary_level) * q.step();
}

double dequantize(const CodeWord& c, const QuantSpec& q) {
  if (static_cast<int>(c.size()) != q.n_bits)
    throw std::invalid_argument("dequantize: code width does not match spec");
  std::uint32_t raw = code_to_level(c);
  std::uint32_t level = c.encoding == Encoding::Gray ? gray_level_to_binary(raw) : raw;
  return dequantize_level(level, q);
}

CodeWord binary_to_gray(const CodeWord& b) {
  if (b.encoding != Encoding::Binary)
    throw std::invalid_argument("binary_to_gray: input is not binary-encoded");
  // level_to_code applies the gray mapping itself
  return level_to_code(code_to_level(b), static_cast<int>(b.size()), Encoding::Gray);
}

CodeWord gray_to_binary(const CodeWord& g) {
  if (g.encoding != Encoding::Gray)
    throw std::invalid_argument("gray_to_binary: input is not gray-encoded");
  return level_to_code(gray_level_to_binary(code_to_level(g)), static_cast<int>(g.size()),
                       Encoding::Binary);
}

}  // namespace nldpe
