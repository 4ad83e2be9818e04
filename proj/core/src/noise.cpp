#include "nldpe/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nldpe {

void NoiseSpec::validate() const {
  if (!(prog.c > 0.0) || !(fluct.c > 0.0))
    throw std::invalid_argument("NoiseSpec: clip points must be positive");
  if (scale < 0.0) throw std::invalid_argument("NoiseSpec: scale must be >= 0");
  for (double g : {kGMin, kGMax}) {
    if (!std::isfinite(sigma(g, prog)) || !std::isfinite(sigma(g, fluct)))
      throw std::invalid_argument("NoiseSpec: sigma non-finite over conductance range");
  }
}

NoiseSpec default_noise_spec(std::uint64_t seed) {
  NoiseSpec s;
  // sigma_prog(G) = 0.4 * G / 100 below the 100 uS clip, 0.4 uS above it.
  s.prog = {1.0, std::log(0.4 / 100.0), 100.0};
  // sigma_fluct saturates earlier and lower: 0.15 uS from 80 uS up.
  s.fluct = {1.0, std::log(0.15 / 80.0), 80.0};
  // TH(G) = exp(0.8*log(G) + b) + c, spanning a ~1V window over the G range.
  s.acam_transfer = {0.8, std::log(0.02), 0.1};
  s.seed = seed;
  s.scale = 1.0;
  return s;
}

double sigma(double g, const SigmaParams& p) {
  if (g < 0.0) g = 0.0;
  double clipped = g > p.c ? p.c : g;
  if (clipped <= 0.0) clipped = std::numeric_limits<double>::min();
  return std::exp(p.a * std::log(clipped) + p.b);
}

double conductance_to_threshold(double g, const TransferParams& t) {
  if (!(g > 0.0)) throw std::domain_error("conductance_to_threshold: G must be > 0");
  return std::exp(t.a * std::log(g) + t.b) + t.c;
}

double threshold_to_conductance(double th, const TransferParams& t) {
  const double u = th - t.c;
  if (!(u > 0.0)) throw std::domain_error("threshold_to_conductance: TH - c must be > 0");
  return std::exp((std::log(u) - t.b) / t.a);
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double to_unit(std::uint64_t v) {
  // (0, 1]: never zero so log() below is safe
  return (static_cast<double>(v >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::uint64_t site_hash(const SiteKey& s) {
  std::uint64_t h = splitmix64(s.image);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(s.array) << 32 | s.row));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(s.col) << 32 | s.element));
  return h;
}

double uniform_at(std::uint64_t seed, std::uint64_t site, std::uint64_t counter,
                  std::uint64_t stream) {
  std::uint64_t k = splitmix64(seed ^ splitmix64(stream ^ 0x756e6966u));
  k = splitmix64(k ^ site);
  k = splitmix64(k ^ counter);
  return to_unit(k);
}

double normal_at(std::uint64_t seed, std::uint64_t site, std::uint64_t counter,
                 std::uint64_t stream) {
  std::uint64_t k = splitmix64(seed ^ splitmix64(stream));
  k = splitmix64(k ^ site);
  k = splitmix64(k ^ counter);
  const double u1 = to_unit(k);
  const double u2 = to_unit(splitmix64(k));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

static double clamp_g(double g) { return g < kGMin ? kGMin : (g > kGMax ? kGMax : g); }

double programmed_conductance(double g_target, const NoiseSpec& spec, const SiteKey& site) {
  if (spec.scale == 0.0) return clamp_g(g_target);
  const double sp = spec.scale * sigma(g_target, spec.prog);
  const double write = sp * normal_at(spec.seed, site_hash(site), 0, kStreamProg);
  return clamp_g(g_target + write);
}

double sample_conductance(double g_target, const NoiseSpec& spec, const SiteKey& site,
                          std::uint64_t read_index) {
  if (spec.scale == 0.0) return clamp_g(g_target);
  const double programmed = programmed_conductance(g_target, spec, site);
  const double sf = spec.scale * sigma(programmed, spec.fluct);
  const double read = sf * normal_at(spec.seed, site_hash(site), read_index, kStreamFluct);
  return clamp_g(programmed + read);
}

double FaultMap::pinned(std::uint64_t image, std::uint32_t array, std::uint32_t row,
                        std::uint32_t col, std::uint32_t element) const {
  for (const auto& e : entries) {
    if (e.site.image == image && e.site.array == array && e.site.row == row &&
        e.site.col == col && e.site.element == element)
      return e.mode == FaultMode::StuckLowG ? kGMin : kGMax;
  }
  return -1.0;
}

}  // namespace nldpe
