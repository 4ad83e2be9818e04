#include "nldpe/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nldpe/dtcompile.hpp"

namespace nldpe {

namespace {

QuantSpec grid_spec(double lo, double hi, int n_bits = 8) {
  QuantSpec q;
  q.in_lo = lo;
  q.in_hi = hi;
  q.out_lo = lo;
  q.out_hi = hi;
  q.n_bits = n_bits;
  q.encoding = Encoding::Binary;
  return q;
}

QuantSpec unit_input_grid(const AcamUnit& u) {
  return grid_spec(u.qspec.in_lo, u.qspec.in_hi, u.qspec.n_bits);
}

double unit_value(const AcamUnit& u, double x, const SearchContext& ctx) {
  return dequantize_level(eval_unit_level(u, x, ctx), u.qspec);
}

void push_stage(PipelineTrace* trace, const char* name, bool nonlinear, bool acam) {
  if (trace != nullptr) trace->stages.push_back({name, nonlinear, acam});
}

void count_adds(const SearchContext& ctx, std::uint64_t n) {
  if (ctx.ledger != nullptr) ctx.ledger->add(EventKind::AdderOp, n);
}

AcamUnit compile_and_program(const std::string& name, const ScalarFn& f, double in_lo,
                             double in_hi, double out_lo, double out_hi,
                             const NoiseSpec& spec, std::uint64_t image_id,
                             bool duplicate_spares = false) {
  QuantSpec q;
  q.in_lo = in_lo;
  q.in_hi = in_hi;
  q.out_lo = out_lo;
  q.out_hi = out_hi;
  q.n_bits = 8;
  q.encoding = Encoding::Gray;
  CompiledFunction c = compile_function(f, q, name);
  return program_unit(c, spec, image_id, 0.05, duplicate_spares);
}

constexpr double kLogFloorIn = 1.0 / 256.0;  // log unit domain start

}  // namespace

std::string to_string(CoreMode m) {
  switch (m) {
    case CoreMode::DualCompute: return "dual";
    case CoreMode::CrossbarOnly: return "crossbar-only";
    case CoreMode::AcamOnly: return "acam-only";
  }
  return "?";
}

void CoreConfig::validate() const {
  if (acam_units.size() != crossbar.cols)
    throw std::invalid_argument("core: need one ACAM unit per crossbar column");
  if (mode == CoreMode::CrossbarOnly) {
    for (const auto& u : acam_units)
      if (u.function != "identity")
        throw std::invalid_argument("core: crossbar-only mode requires identity units");
  }
  if (mode == CoreMode::AcamOnly && !crossbar.is_identity)
    throw std::invalid_argument("core: acam-only mode requires an identity crossbar");
}

std::vector<CodeWord> run_core(const CoreConfig& cfg, const std::vector<double>& x,
                               const SearchContext& ctx) {
  cfg.validate();
  NoiseSpec noise_off{};
  noise_off.scale = 0.0;
  const NoiseSpec& noise = ctx.noise != nullptr ? *ctx.noise : noise_off;
  VmmResult r = vmm(cfg.crossbar, x, noise, 1, ctx.search_index, ctx.ledger);
  std::vector<CodeWord> out;
  out.reserve(cfg.acam_units.size());
  for (std::size_t j = 0; j < cfg.acam_units.size(); ++j) {
    SearchContext cc = ctx;
    cc.search_index = ctx.search_index * 1024 + j;
    out.push_back(eval_unit(cfg.acam_units[j], r.analog_out[j], cc));
  }
  return out;
}

namespace {

CoreConfig build_core(CoreMode mode, const Matrix& w, const ScalarFn& f, double out_lo,
                      double out_hi, const NoiseSpec& spec, std::uint64_t image_base,
                      bool identity_units, bool identity_crossbar) {
  CoreConfig cfg;
  cfg.mode = mode;
  cfg.crossbar = identity_crossbar ? identity_image(w.rows, spec, image_base)
                                   : program_asl(w, spec, image_base);
  for (std::size_t j = 0; j < w.cols; ++j) {
    const double s = cfg.crossbar.col_scale[j];
    if (identity_units) {
      cfg.acam_units.push_back(compile_and_program(
          "identity", [](double u) { return u; }, -1.0, 1.0, -1.0, 1.0, spec,
          image_base + 1 + j));
    } else {
      cfg.acam_units.push_back(compile_and_program(
          "column", [f, s](double u) { return f(s * u); }, -1.0, 1.0, out_lo, out_hi, spec,
          image_base + 1 + j));
    }
  }
  return cfg;
}

}  // namespace

CoreConfig make_dual_core(const Matrix& w, const ScalarFn& f, double f_out_lo,
                          double f_out_hi, const NoiseSpec& spec, std::uint64_t image_base) {
  return build_core(CoreMode::DualCompute, w, f, f_out_lo, f_out_hi, spec, image_base, false,
                    false);
}

CoreConfig make_crossbar_only_core(const Matrix& w, const NoiseSpec& spec,
                                   std::uint64_t image_base) {
  return build_core(CoreMode::CrossbarOnly, w, {}, 0, 0, spec, image_base, true, false);
}

CoreConfig make_acam_only_core(std::size_t n, const ScalarFn& f, double f_out_lo,
                               double f_out_hi, const NoiseSpec& spec,
                               std::uint64_t image_base) {
  Matrix eye(n, n);
  for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = 1.0;
  return build_core(CoreMode::AcamOnly, eye, f, f_out_lo, f_out_hi, spec, image_base, false,
                    true);
}

LogExpUnits make_logexp_units(const NoiseSpec& spec, std::uint64_t image_base,
                              bool duplicate_spares) {
  LogExpUnits lu;
  lu.log_u = compile_and_program("log", [](double x) { return std::log(x); }, kLogFloorIn,
                                 1.0, -8.0, 0.0, spec, image_base, duplicate_spares);
  lu.exp_u = compile_and_program("exp", [](double x) { return std::exp(x); }, -8.0, 0.0, 0.0,
                                 1.0, spec, image_base + 1, duplicate_spares);
  return lu;
}

double dac8(double v, const QuantSpec& q, RunLedger* ledger) {
  if (ledger != nullptr) ledger->add(EventKind::DacConversion, 1);
  return dequantize_level(quantize_level(v, q), q);
}

double mul_logexp(double a, double b, const LogExpUnits& lu, const SearchContext& ctx,
                  PipelineTrace* trace) {
  if (a == 0.0 || b == 0.0) return 0.0;  // short-circuit, no search issued
  const double sign = (a < 0.0) == (b < 0.0) ? 1.0 : -1.0;
  SearchContext c1 = ctx, c2 = ctx, c3 = ctx;
  c2.search_index = ctx.search_index + 1;
  c3.search_index = ctx.search_index + 2;
  const QuantSpec log_in = unit_input_grid(lu.log_u);
  const QuantSpec exp_in = unit_input_grid(lu.exp_u);
  push_stage(trace, "log", true, true);
  const double la = unit_value(lu.log_u, dac8(std::fabs(a), log_in, ctx.ledger), c1);
  const double lb = unit_value(lu.log_u, dac8(std::fabs(b), log_in, ctx.ledger), c2);
  push_stage(trace, "add", false, false);
  count_adds(ctx, 1);
  const double s = la + lb;
  push_stage(trace, "exp", true, true);
  const double p = unit_value(lu.exp_u, dac8(s, exp_in, ctx.ledger), c3);
  return sign * p;
}

double dot_logexp(std::span<const double> a, std::span<const double> b,
                  const LogExpUnits& lu, const SearchContext& ctx, PipelineTrace* trace) {
  if (a.size() != b.size()) throw std::invalid_argument("dot_logexp: length mismatch");
  const QuantSpec log_in = unit_input_grid(lu.log_u);
  const QuantSpec exp_in = unit_input_grid(lu.exp_u);
  push_stage(trace, "log", true, true);
  push_stage(trace, "add", false, false);
  push_stage(trace, "exp", true, true);
  push_stage(trace, "sum", false, false);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    SearchContext c = ctx;
    c.search_index = ctx.search_index + 3 * i;
    if (a[i] == 0.0 || b[i] == 0.0) {
      count_adds(ctx, 1);  // the add slot still cycles
      continue;
    }
    const double sign = (a[i] < 0.0) == (b[i] < 0.0) ? 1.0 : -1.0;
    const double la = unit_value(lu.log_u, dac8(std::fabs(a[i]), log_in, ctx.ledger), c);
    c.search_index += 1;
    const double lb = unit_value(lu.log_u, dac8(std::fabs(b[i]), log_in, ctx.ledger), c);
    count_adds(ctx, 1);
    c.search_index += 1;
    const double p = unit_value(lu.exp_u, dac8(la + lb, exp_in, ctx.ledger), c);
    acc += sign * p;
  }
  count_adds(ctx, a.empty() ? 0 : static_cast<std::uint64_t>(a.size()) - 1);
  return acc;
}

SoftmaxUnits make_softmax_units(std::size_t max_len, const NoiseSpec& spec,
                                std::uint64_t image_base) {
  if (max_len < 1) throw std::invalid_argument("softmax: max_len must be >= 1");
  SoftmaxUnits su;
  su.max_len = max_len;
  su.exp_u = compile_and_program("exp", [](double x) { return std::exp(x); }, -8.0, 0.0, 0.0,
                                 1.0, spec, image_base);
  const double top = static_cast<double>(max_len);
  if (max_len == 1) {
    su.logsum_u = su.exp_u;  // degenerate; never consulted for L = 1
  } else {
    su.logsum_u = compile_and_program("logsum", [](double x) { return std::log(x); }, 1.0,
                                      top, 0.0, std::log(top), spec, image_base + 1);
  }
  return su;
}

namespace {

/// Steps 1-4 of the softmax pipeline: max shift, exp, sum, log, subtract.
/// Returns the log-scale values (reals on no particular grid yet).
std::vector<double> softmax_log_values(std::span<const double> y, const SoftmaxUnits& su,
                                       const SearchContext& ctx, PipelineTrace* trace) {
  if (y.empty()) throw std::invalid_argument("softmax: empty input");
  if (y.size() > su.max_len) throw std::invalid_argument("softmax: input longer than units allow");
  const QuantSpec exp_in = unit_input_grid(su.exp_u);

  push_stage(trace, "max_shift", false, false);
  double ymax = y[0];
  for (double v : y) ymax = std::fmax(ymax, v);
  if (ctx.ledger != nullptr) ctx.ledger->add(EventKind::RegisterAccess, y.size());

  push_stage(trace, "exp", true, true);
  std::vector<double> z(y.size());
  std::vector<double> e(y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    count_adds(ctx, 1);
    z[i] = dac8(y[i] - ymax, exp_in, ctx.ledger);
    SearchContext c = ctx;
    c.search_index = ctx.search_index + i;
    e[i] = unit_value(su.exp_u, z[i], c);
    s += e[i];
  }
  push_stage(trace, "sum", false, false);
  count_adds(ctx, y.size() - 1);

  push_stage(trace, "log", true, true);
  double ls = 0.0;
  if (y.size() > 1) {
    const QuantSpec log_in = unit_input_grid(su.logsum_u);
    SearchContext c = ctx;
    c.search_index = ctx.search_index + y.size();
    ls = unit_value(su.logsum_u, dac8(s, log_in, ctx.ledger), c);
  }
  push_stage(trace, "subtract", false, false);
  std::vector<double> d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    count_adds(ctx, 1);
    d[i] = z[i] - ls;
  }
  return d;
}

}  // namespace

std::vector<std::uint32_t> softmax_log_codes(std::span<const double> y, const SoftmaxUnits& su,
                                             const SearchContext& ctx, PipelineTrace* trace) {
  const std::vector<double> d = softmax_log_values(y, su, ctx, trace);
  const QuantSpec grid = unit_input_grid(su.exp_u);  // the shared [-8, 0] adder grid
  std::vector<std::uint32_t> codes(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) codes[i] = quantize_level(d[i], grid);
  return codes;
}

std::vector<double> softmax_logexp(std::span<const double> y, const SoftmaxUnits& su,
                                   const SearchContext& ctx, PipelineTrace* trace) {
  const std::vector<std::uint32_t> codes = softmax_log_codes(y, su, ctx, trace);
  const QuantSpec grid = unit_input_grid(su.exp_u);
  push_stage(trace, "exp", true, true);
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    SearchContext c = ctx;
    c.search_index = ctx.search_index + 2 * su.max_len + i;
    out[i] = unit_value(su.exp_u, dequantize_level(codes[i], grid), c);
  }
  return out;
}

AttentionEngine make_attention_engine(const Matrix& wq, const Matrix& wk, const Matrix& wv,
                                      std::size_t n_tokens, const NoiseSpec& spec,
                                      std::uint64_t image_base) {
  if (wq.cols != wk.cols) throw std::invalid_argument("attention: d_k mismatch");
  AttentionEngine eng;
  eng.d_k = wq.cols;
  Matrix wq_scaled = wq;  // 1/sqrt(d_k) fused into the query weights
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(eng.d_k));
  for (auto& v : wq_scaled.data) v *= inv_sqrt_dk;
  eng.wq_img = program_asl(wq_scaled, spec, image_base);
  eng.wk_img = program_asl(wk, spec, image_base + 1);
  eng.wv_img = program_asl(wv, spec, image_base + 2);
  eng.log_act = compile_and_program("log", [](double x) { return std::log(x); }, kLogFloorIn,
                                    1.0, -8.0, 0.0, spec, image_base + 3);
  eng.softmax = make_softmax_units(n_tokens, spec, image_base + 4);
  eng.roundtrip = make_logexp_units(spec, image_base + 6);
  eng.exp_in = grid_spec(-8.0, 0.0);
  double qmax = 0.0, kmax = 0.0, vmax = 0.0;
  for (double s : eng.wq_img.col_scale) qmax = std::fmax(qmax, s);
  for (double s : eng.wk_img.col_scale) kmax = std::fmax(kmax, s);
  for (double s : eng.wv_img.col_scale) vmax = std::fmax(vmax, s);
  const double ln_m1 = std::log(qmax * kmax);
  const double ln_m2 = std::log(vmax);
  eng.exp_dm1 = compile_and_program("exp", [](double x) { return std::exp(x); }, ln_m1 - 8.0,
                                    ln_m1, 0.0, qmax * kmax, spec, image_base + 8);
  eng.exp_dm2 = compile_and_program("exp", [](double x) { return std::exp(x); }, ln_m2 - 8.0,
                                    ln_m2, 0.0, vmax, spec, image_base + 9);
  eng.exp1_in = grid_spec(ln_m1 - 8.0, ln_m1);
  eng.exp2_in = grid_spec(ln_m2 - 8.0, ln_m2);
  return eng;
}

namespace {

struct LogRow {
  std::vector<double> logmag;  // log|value| incl. column-scale constant
  std::vector<int> sign;       // -1, 0, +1
};

/// Linear layer + log activation: one crossbar pass, then the per-column log
/// units; the static per-column scale re-enters as a digital constant add.
LogRow linear_log_row(const CrossbarImage& img, const AcamUnit& log_u,
                      const std::vector<double>& x, const SearchContext& ctx,
                      std::uint64_t salt) {
  NoiseSpec noise_off{};
  noise_off.scale = 0.0;
  const NoiseSpec& noise = ctx.noise != nullptr ? *ctx.noise : noise_off;
  VmmResult r = vmm(img, x, noise, 1, ctx.search_index + salt, ctx.ledger);
  const QuantSpec log_in = grid_spec(kLogFloorIn, 1.0);
  LogRow row;
  row.logmag.resize(img.cols);
  row.sign.resize(img.cols);
  for (std::size_t j = 0; j < img.cols; ++j) {
    const double v = r.analog_out[j];
    if (v == 0.0) {
      row.sign[j] = 0;
      row.logmag[j] = -1e30;
      continue;
    }
    row.sign[j] = v < 0.0 ? -1 : 1;
    SearchContext c = ctx;
    c.search_index = ctx.search_index + salt + 17 * j;
    const double lm = dequantize_level(
        eval_unit_level(log_u, dac8(std::fabs(v), log_in, ctx.ledger), c), log_u.qspec);
    row.logmag[j] = lm + std::log(img.col_scale[j]);
  }
  return row;
}

}  // namespace

Matrix attention(const AttentionEngine& eng, const Matrix& xq, const Matrix& xk,
                 const Matrix& xv, bool fused, const SearchContext& ctx,
                 PipelineTrace* trace) {
  if (xq.cols != eng.wq_img.rows || xk.cols != eng.wk_img.rows || xv.cols != eng.wv_img.rows)
    throw std::invalid_argument("attention: token width does not match weights");
  if (xk.rows != xv.rows) throw std::invalid_argument("attention: key/value count mismatch");
  const std::size_t n_q = xq.rows, n_kv = xk.rows;
  const std::size_t d_v = eng.wv_img.cols;

  push_stage(trace, "linear+log", true, true);
  std::vector<LogRow> lq(n_q), lk(n_kv), lv(n_kv);
  for (std::size_t t = 0; t < n_q; ++t) {
    std::vector<double> x(xq.data.begin() + static_cast<long>(t * xq.cols),
                          xq.data.begin() + static_cast<long>((t + 1) * xq.cols));
    lq[t] = linear_log_row(eng.wq_img, eng.log_act, x, ctx, 1000 + 31 * t);
  }
  for (std::size_t t = 0; t < n_kv; ++t) {
    std::vector<double> x(xk.data.begin() + static_cast<long>(t * xk.cols),
                          xk.data.begin() + static_cast<long>((t + 1) * xk.cols));
    lk[t] = linear_log_row(eng.wk_img, eng.log_act, x, ctx, 2000 + 31 * t);
    std::vector<double> xv_row(xv.data.begin() + static_cast<long>(t * xv.cols),
                               xv.data.begin() + static_cast<long>((t + 1) * xv.cols));
    lv[t] = linear_log_row(eng.wv_img, eng.log_act, xv_row, ctx, 3000 + 31 * t);
  }

  // DMMul_1: scores via add + exp through the engine's score-range unit
  const AcamUnit& exp_dm1 = eng.exp_dm1;
  const QuantSpec& exp1_in = eng.exp1_in;

  push_stage(trace, "dmmul1-add", false, false);
  push_stage(trace, "dmmul1-exp", true, true);
  Matrix scores(n_q, n_kv);
  for (std::size_t t = 0; t < n_q; ++t) {
    for (std::size_t u = 0; u < n_kv; ++u) {
      double acc = 0.0;
      for (std::size_t j = 0; j < eng.d_k; ++j) {
        if (lq[t].sign[j] == 0 || lk[u].sign[j] == 0) continue;
        count_adds(ctx, 1);
        const double s = lq[t].logmag[j] + lk[u].logmag[j];
        SearchContext c = ctx;
        c.search_index = ctx.search_index + 4000 + (t * n_kv + u) * eng.d_k + j;
        const double p = unit_value(exp_dm1, dac8(s, exp1_in, ctx.ledger), c);
        acc += lq[t].sign[j] * lk[u].sign[j] * p;
        count_adds(ctx, 1);
      }
      scores.at(t, u) = acc;
    }
  }

  // Softmax per query row; the fused graph keeps the log-scale codes
  push_stage(trace, "softmax", true, true);
  Matrix logp(n_q, n_kv);
  for (std::size_t t = 0; t < n_q; ++t) {
    std::vector<double> row(n_kv);
    for (std::size_t u = 0; u < n_kv; ++u) row[u] = scores.at(t, u);
    SearchContext c = ctx;
    c.search_index = ctx.search_index + 8000 + 64 * t;
    const std::vector<std::uint32_t> codes = softmax_log_codes(row, eng.softmax, c, nullptr);
    for (std::size_t u = 0; u < n_kv; ++u) {
      double d = dequantize_level(codes[u], eng.exp_in);
      if (!fused) {
        // explicit exp-then-log round trip between softmax and DMMul_2
        push_stage(trace, "softmax-exp", true, true);
        push_stage(trace, "dmmul2-log", true, true);
        SearchContext ce = c;
        ce.search_index = c.search_index + 32 + u;
        const double p = unit_value(eng.roundtrip.exp_u, d, ce);
        if (p == 0.0) {
          d = eng.exp_in.out_lo;  // empty probability keeps the floor code
        } else {
          const QuantSpec log_in = grid_spec(kLogFloorIn, 1.0);
          d = unit_value(eng.roundtrip.log_u, dac8(p, log_in, ctx.ledger), ce);
        }
      }
      logp.at(t, u) = d;
    }
  }

  // DMMul_2: output = P * V in the log domain
  const AcamUnit& exp_dm2 = eng.exp_dm2;
  const QuantSpec& exp2_in = eng.exp2_in;
  push_stage(trace, "dmmul2-add", false, false);
  push_stage(trace, "dmmul2-exp", true, true);
  Matrix out(n_q, d_v);
  for (std::size_t t = 0; t < n_q; ++t) {
    for (std::size_t j = 0; j < d_v; ++j) {
      double acc = 0.0;
      for (std::size_t u = 0; u < n_kv; ++u) {
        if (lv[u].sign[j] == 0) continue;
        count_adds(ctx, 1);
        const double s = logp.at(t, u) + lv[u].logmag[j];
        SearchContext c = ctx;
        c.search_index = ctx.search_index + 16000 + (t * d_v + j) * n_kv + u;
        const double p = unit_value(exp_dm2, dac8(s, exp2_in, ctx.ledger), c);
        acc += lv[u].sign[j] * p;
        count_adds(ctx, 1);
      }
      out.at(t, j) = acc;
    }
  }
  return out;
}

Matrix attention_oracle(const Matrix& xq, const Matrix& xk, const Matrix& xv,
                        const Matrix& wq, const Matrix& wk, const Matrix& wv) {
  Matrix q = matmul(xq, wq), k = matmul(xk, wk), v = matmul(xv, wv);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(wq.cols));
  Matrix scores = matmul(q, transpose(k));
  for (auto& s : scores.data) s *= inv_sqrt_dk;
  Matrix out(q.rows, wv.cols);
  for (std::size_t t = 0; t < scores.rows; ++t) {
    double m = scores.at(t, 0);
    for (std::size_t u = 0; u < scores.cols; ++u) m = std::fmax(m, scores.at(t, u));
    double denom = 0.0;
    std::vector<double> e(scores.cols);
    for (std::size_t u = 0; u < scores.cols; ++u) {
      e[u] = std::exp(scores.at(t, u) - m);
      denom += e[u];
    }
    for (std::size_t j = 0; j < wv.cols; ++j) {
      double acc = 0.0;
      for (std::size_t u = 0; u < scores.cols; ++u) acc += e[u] / denom * v.at(u, j);
      out.at(t, j) = acc;
    }
  }
  return out;
}

}  // namespace nldpe
