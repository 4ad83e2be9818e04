#pragma once

#include <cstdint>
#include <vector>

namespace nldpe {

// RRAM conductance range, in microsiemens.
inline constexpr double kGMin = 0.01;
inline constexpr double kGMax = 150.0;

/// sigma(G) = exp(a*log(clip(G, 0, c)) + b); G=0 maps to the smallest
/// positive double before the log.
struct SigmaParams {
  double a = 1.0;
  double b = 0.0;
  double c = kGMax;
};

/// Conductance-to-threshold transfer TH(G) = exp(a*log(G) + b) + c.
struct TransferParams {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
};

struct NoiseSpec {
  SigmaParams prog;           // one-time programming error
  SigmaParams fluct;          // per-read fluctuation
  TransferParams acam_transfer;
  std::uint64_t seed = 0;
  double scale = 1.0;         // multiplies both sigmas; 0 = noise-free

  bool enabled() const { return scale > 0.0; }
  void validate() const;
};

/// Synthetic default fit, device-envelope calibrated: sigma_prog rises
/// roughly linearly with G and saturates at ~0.4 uS, sigma_fluct saturates in
/// the high-conductance regime, and the transfer is mildly sub-linear.
NoiseSpec default_noise_spec(std::uint64_t seed = 0);

double sigma(double g, const SigmaParams& p);

double conductance_to_threshold(double g, const TransferParams& t);  // throws on g <= 0
double threshold_to_conductance(double th, const TransferParams& t);

/// Cell address inside one image: sub-array plane, row, column, element.
/// For ACAM cells element 0 is the lo-bound RRAM and 1 the hi-bound RRAM.
struct SiteKey {
  std::uint64_t image = 0;
  std::uint32_t array = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint32_t element = 0;
};

std::uint64_t site_hash(const SiteKey& s);

/// Deterministic standard normal keyed by (seed, site, counter, stream).
/// Stateless: any evaluation order and thread schedule yields the same draw.
double normal_at(std::uint64_t seed, std::uint64_t site, std::uint64_t counter,
                 std::uint64_t stream);

/// Deterministic uniform draw in (0, 1], same keying scheme.
double uniform_at(std::uint64_t seed, std::uint64_t site, std::uint64_t counter,
                  std::uint64_t stream);

inline constexpr std::uint64_t kStreamProg = 0x70726f67u;   // "prog"
inline constexpr std::uint64_t kStreamFluct = 0x666c7563u;  // "fluc"

/// Readout conductance: target + fixed programming error + fresh per-read
/// fluctuation, clamped to [kGMin, kGMax].
double sample_conductance(double g_target, const NoiseSpec& spec, const SiteKey& site,
                          std::uint64_t read_index);

/// Programmed (written) conductance only: target + programming error, clamped.
double programmed_conductance(double g_target, const NoiseSpec& spec, const SiteKey& site);

enum class FaultMode { StuckLowG, StuckHighG };

struct FaultEntry {
  SiteKey site;
  FaultMode mode = FaultMode::StuckLowG;
};

/// Stuck-at fault set. Pinned cells read kGMin/kGMax regardless of programming.
struct FaultMap {
  std::vector<FaultEntry> entries;

  bool empty() const { return entries.empty(); }
  /// Pinned conductance at this address, or a negative value if unfaulted.
  double pinned(std::uint64_t image, std::uint32_t array, std::uint32_t row,
                std::uint32_t col, std::uint32_t element) const;
};

}  // namespace nldpe
