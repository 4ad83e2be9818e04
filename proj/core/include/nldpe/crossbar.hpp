#pragma once

#include <cstdint>
#include <vector>

#include "nldpe/codes.hpp"
#include "nldpe/costmodel.hpp"
#include "nldpe/matrix.hpp"
#include "nldpe/noise.hpp"

namespace nldpe {

enum class SliceScheme { DSL, ASL };

/// Conductance planes of one programmed crossbar core. Signed weights use a
/// differential pair of arrays per scheme:
///   A-SL planes: 0 pos primary, 1 pos residual(10x), 2 neg primary, 3 neg residual
///   D-SL planes: slice k of the positive side is plane 2k, negative side 2k+1
struct CrossbarImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  SliceScheme scheme = SliceScheme::ASL;
  QuantSpec wspec;           // weight quantization (D-SL); out range bounds |w|
  double w_max = 1.0;        // conductance scale: |w| = w_max maps to g_max
  double x_max = 1.0;        // assumed input magnitude bound
  int bits_per_cell = 2;     // D-SL slice width
  bool is_identity = false;  // identity passthrough (ACAM-only mode)
  std::uint64_t image_id = 0;

  std::vector<Matrix> planes;        // achieved conductances, post program-and-verify
  std::vector<double> col_scale;     // per-column output normalization divisor
  FaultMap faults;
  std::size_t residual_clamp_count = 0;  // A-SL epsilons that exceeded the 10x window

  std::size_t slice_count() const;
  void validate_shape() const;
};

struct VmmResult {
  std::vector<double> analog_out;  // normalized column currents
};

/// D-SL: fixed-point slices per weight, one discrete conductance level per
/// cell, programming noise applied once at write time.
CrossbarImage program_dsl(const Matrix& w, const QuantSpec& q, const NoiseSpec& noise,
                          std::uint64_t image_id = 0, const FaultMap& faults = {},
                          int bits_per_cell = 2, double x_max = 1.0);

/// A-SL: continuous primary cell plus a second cell holding 10x the measured
/// programming residual; effective weight = primary + residual / 10.
CrossbarImage program_asl(const Matrix& w, const NoiseSpec& noise,
                          std::uint64_t image_id = 0, const FaultMap& faults = {},
                          double w_max = 0.0, double x_max = 1.0);

/// Identity passthrough image for ACAM-only mode.
CrossbarImage identity_image(std::size_t n, const NoiseSpec& noise,
                             std::uint64_t image_id = 0);

/// Effective weight matrix as read in one shot (fresh read fluctuation per
/// read_index; reads > 1 averages independent reads).
Matrix effective_weights(const CrossbarImage& img, const NoiseSpec& noise,
                         std::uint64_t read_index);

VmmResult vmm(const CrossbarImage& img, const std::vector<double>& x, const NoiseSpec& noise,
              int reads = 1, std::uint64_t read_base = 0, RunLedger* ledger = nullptr);

/// Pins cells at the conductance rails; pins survive reprogramming (reprogram
/// honors the stored fault map).
void inject_faults(CrossbarImage& img, const FaultMap& fm);

/// Re-runs program-and-verify for the image's own weights source matrix.
CrossbarImage reprogram(const CrossbarImage& img, const Matrix& w, const NoiseSpec& noise);

}  // namespace nldpe
