#pragma once

#include <cstdint>
#include <vector>

#include "nldpe/acam.hpp"
#include "nldpe/dtcompile.hpp"
#include "nldpe/matrix.hpp"
#include "nldpe/noise.hpp"

namespace nldpe {

/// Trainable relaxation of one ACAM unit: per-bit lower/upper threshold
/// vectors, the weight-to-conductance map, and the squash constant.
struct SoftAcamParams {
  struct BitParams {
    std::vector<double> w_lo;   // one entry per active row
    std::vector<double> w_hi;
    std::vector<std::uint8_t> frozen_lo;  // 1 = never updated (stuck cell)
    std::vector<std::uint8_t> frozen_hi;
  };
  std::vector<BitParams> bits;  // MSB first
  double g_ratio = 1.0;
  double g_min = kGMin;
  double g_max = kGMax;
  double epsilon = 1e-12;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  int n_bits = 8;

  void validate() const;
};

SoftAcamParams soft_params_from_compiled(const CompiledFunction& c);

struct NafConfig {
  int epochs = 10;
  int batch = 256;
  double step_size = 0.0;      // 0 = 1e-3 * domain span
  double lambda1 = 0.0;        // ||W||_inf coefficient
  double lambda2 = 0.0;        // ||eps||_inf coefficient
  int samples_per_dt = 5000;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Differentiable forward pass: clip thresholds to conductance, inject noise,
/// unmap, ReLU-product match, sum, m/(m+eps) squash, then the squared-
/// difference decode. Returns the soft output level in [0, 2^n - 1].
/// sample_index keys the per-forward noise draw.
double soft_forward(const SoftAcamParams& p, double x, const NoiseSpec& noise,
                    std::uint64_t sample_index);

/// Soft match value of one bit (the m_i of the algorithm), same noise keying.
double soft_bit(const SoftAcamParams& p, int bit_slot, double x, const NoiseSpec& noise,
                std::uint64_t sample_index);

struct SoftGradient {
  std::vector<SoftAcamParams::BitParams> d_bits;  // same shape as params
};

/// Analytic gradient of (soft_forward(x) - target_level)^2 with respect to
/// every threshold; ReLU subgradients are zero at kinks and the noise draw is
/// treated as a constant.
SoftGradient soft_gradient(const SoftAcamParams& p, double x, double target_level,
                           const NoiseSpec& noise, std::uint64_t sample_index);

struct DtFinetuneResult {
  SoftAcamParams params;          // fine-tuned thresholds (all bits, only one trained)
  std::vector<double> epoch_loss;
  bool diverged = false;
};

/// Per-bit fine-tuning: SGD on uniformly sampled inputs against the noise-free
/// compiled bit targets, fresh noise every evaluation. Cells listed in
/// `frozen` keep their compiled values.
DtFinetuneResult finetune_dt(const CompiledFunction& c, int bit_slot, const NoiseSpec& noise,
                             const NafConfig& cfg,
                             const std::vector<SiteKey>& frozen = {});

/// Writes fine-tuned thresholds for one bit back into a programmed unit.
void apply_bit_params(AcamUnit& u, int bit_slot, const SoftAcamParams& p);

double asl_loss(const std::vector<double>& y, const std::vector<double>& y_hat,
                const Matrix& w, const Matrix& eps_resid, double lambda1, double lambda2);

struct CrossbarTask {
  Matrix x;  // inputs, one sample per row
  Matrix y;  // targets
};

struct CrossbarFinetuneResult {
  Matrix w;
  std::vector<double> epoch_loss;
  bool diverged = false;
};

/// Gradient epochs on the A-SL loss with fresh weight noise per batch.
CrossbarFinetuneResult finetune_crossbar(const Matrix& w0, const CrossbarTask& task,
                                         const NoiseSpec& noise, const NafConfig& cfg);

}  // namespace nldpe
