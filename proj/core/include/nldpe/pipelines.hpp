#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nldpe/acam.hpp"
#include "nldpe/costmodel.hpp"
#include "nldpe/crossbar.hpp"
#include "nldpe/matrix.hpp"

namespace nldpe {

enum class CoreMode { DualCompute, CrossbarOnly, AcamOnly };

std::string to_string(CoreMode m);

/// One compute core: a crossbar feeding one ACAM unit per column.
struct CoreConfig {
  CoreMode mode = CoreMode::DualCompute;
  CrossbarImage crossbar;
  std::vector<AcamUnit> acam_units;  // one per column

  void validate() const;
};

/// vmm then per-column unit search.
std::vector<CodeWord> run_core(const CoreConfig& cfg, const std::vector<double>& x,
                               const SearchContext& ctx);

/// Builders enforcing the mode contracts. Units are compiled against the
/// normalized column range [-1, 1] with the per-column output scale folded
/// into the compiled function, so a dual-compute core reproduces
/// quantize(f(Wx)) exactly.
CoreConfig make_dual_core(const Matrix& w, const ScalarFn& f, double f_out_lo,
                          double f_out_hi, const NoiseSpec& spec,
                          std::uint64_t image_base = 0x100);
CoreConfig make_crossbar_only_core(const Matrix& w, const NoiseSpec& spec,
                                   std::uint64_t image_base = 0x200);
CoreConfig make_acam_only_core(std::size_t n, const ScalarFn& f, double f_out_lo,
                               double f_out_hi, const NoiseSpec& spec,
                               std::uint64_t image_base = 0x300);

/// Stage descriptor for the structural check that every nonlinear scalar
/// operation runs inside an ACAM unit.
struct StageDesc {
  std::string name;
  bool nonlinear = false;
  bool through_acam = false;
};

struct PipelineTrace {
  std::vector<StageDesc> stages;
  bool nonlinear_outside_acam() const {
    for (const auto& s : stages)
      if (s.nonlinear && !s.through_acam) return true;
    return false;
  }
};

/// The shared log/exp unit pair for [0,1]-magnitude operands:
///   log: [1/256, 1] -> [-8, 0]   exp: [-8, 0] -> [0, 1]
/// Both 8-bit Gray; the grids are aligned so exp-then-log round-trips exactly
/// on codes whose value is at least ~1/8 of full scale.
struct LogExpUnits {
  AcamUnit log_u;
  AcamUnit exp_u;
};

LogExpUnits make_logexp_units(const NoiseSpec& spec, std::uint64_t image_base = 0x10,
                              bool duplicate_spares = false);

/// 8-bit DAC onto the unit's input grid.
double dac8(double v, const QuantSpec& q, RunLedger* ledger = nullptr);

/// sign(a)*sign(b) * exp(log|a| + log|b|) through the units; exact-zero
/// operands short-circuit to zero.
double mul_logexp(double a, double b, const LogExpUnits& lu, const SearchContext& ctx,
                  PipelineTrace* trace = nullptr);

/// Fig-style four-step dot product: element-wise log, digital adds,
/// element-wise exp, digital sum.
double dot_logexp(std::span<const double> a, std::span<const double> b,
                  const LogExpUnits& lu, const SearchContext& ctx,
                  PipelineTrace* trace = nullptr);

struct SoftmaxUnits {
  AcamUnit exp_u;     // [-8, 0] -> [0, 1]
  AcamUnit logsum_u;  // [1, L] -> [0, ln L]
  std::size_t max_len = 64;
};

SoftmaxUnits make_softmax_units(std::size_t max_len, const NoiseSpec& spec,
                                std::uint64_t image_base = 0x20);

/// Five-step softmax; inputs are max-shifted before the first exp stage.
std::vector<double> softmax_logexp(std::span<const double> y, const SoftmaxUnits& su,
                                   const SearchContext& ctx, PipelineTrace* trace = nullptr);

/// Log-scale softmax output as codes on the shared [-8, 0] grid; this is what
/// the fused attention graph feeds into the second data-dependent multiply.
std::vector<std::uint32_t> softmax_log_codes(std::span<const double> y, const SoftmaxUnits& su,
                                             const SearchContext& ctx,
                                             PipelineTrace* trace = nullptr);

/// Attention graph: linear layers on crossbars with log-activation units, the
/// two data-dependent multiplies through add+exp, and softmax in between. The
/// 1/sqrt(d_k) scale is folded into W_Q at programming time.
struct AttentionEngine {
  CrossbarImage wq_img, wk_img, wv_img;
  AcamUnit log_act;        // |normalized column| -> log code, shared config
  SoftmaxUnits softmax;
  LogExpUnits roundtrip;   // explicit exp-then-log pair used by the unfused graph
  AcamUnit exp_dm1;        // score-range exp, spans the static q*k bound
  AcamUnit exp_dm2;        // output-range exp, spans the static value bound
  QuantSpec exp_in;        // the shared [-8, 0] adder grid
  QuantSpec exp1_in, exp2_in;
  std::size_t d_k = 0;
};

AttentionEngine make_attention_engine(const Matrix& wq, const Matrix& wk, const Matrix& wv,
                                      std::size_t n_tokens, const NoiseSpec& spec,
                                      std::uint64_t image_base = 0x40);

/// fused = true bypasses the inverse exp/log pair between softmax and the
/// second multiply; false runs it explicitly.
Matrix attention(const AttentionEngine& eng, const Matrix& xq, const Matrix& xk,
                 const Matrix& xv, bool fused, const SearchContext& ctx,
                 PipelineTrace* trace = nullptr);

/// Float reference for the same graph (no quantization, no analog path).
Matrix attention_oracle(const Matrix& xq, const Matrix& xk, const Matrix& xv,
                        const Matrix& wq, const Matrix& wk, const Matrix& wv);

}  // namespace nldpe
