#include "nldpe/naf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nldpe {

namespace {

constexpr std::uint64_t kNafImage = 0x4e4146;  // soft-model noise namespace
constexpr double kGradClip = 1e3;

double clip(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct BitForward {
  std::vector<double> w_lo_eff, w_hi_eff;  // noisy, unmapped thresholds
  std::vector<std::uint8_t> pass_lo, pass_hi;  // clip/clamp pass-through flags
  double s = 0.0;  // match sum before the squash
  double m = 0.0;  // squashed match
};

/// Lines 2-9 of the relaxation for one bit.
BitForward forward_bit(const SoftAcamParams& p, int slot, double x, const NoiseSpec& noise,
                       std::uint64_t sample_index) {
  const auto& bp = p.bits[static_cast<std::size_t>(slot)];
  BitForward f;
  const std::size_t n = bp.w_lo.size();
  f.w_lo_eff.resize(n);
  f.w_hi_eff.resize(n);
  f.pass_lo.resize(n);
  f.pass_hi.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (int elem = 0; elem < 2; ++elem) {
      const double w = elem == 0 ? bp.w_lo[r] : bp.w_hi[r];
      const double g_ideal = (w - p.domain_lo) * p.g_ratio + p.g_min;
      const double g = clip(g_ideal, p.g_min, p.g_max);
      bool pass = g_ideal >= p.g_min && g_ideal <= p.g_max;
      double g_noisy = g;
      if (noise.enabled()) {
        SiteKey site{kNafImage, static_cast<std::uint32_t>(slot),
                     static_cast<std::uint32_t>(r), 0, static_cast<std::uint32_t>(elem)};
        const double sp = noise.scale * sigma(g, noise.prog);
        const double sf = noise.scale * sigma(g, noise.fluct);
        g_noisy = g + sp * normal_at(noise.seed, site_hash(site), sample_index, kStreamProg) +
                  sf * normal_at(noise.seed, site_hash(site), sample_index, kStreamFluct);
        g_noisy = clip(g_noisy, p.g_min, p.g_max);
      }
      const double w_eff_raw = (g_noisy - p.g_min) / p.g_ratio + p.domain_lo;
      const double w_eff = clip(w_eff_raw, p.domain_lo, p.domain_hi);
      pass = pass && w_eff_raw >= p.domain_lo && w_eff_raw <= p.domain_hi;
      if (elem == 0) {
        f.w_lo_eff[r] = w_eff;
        f.pass_lo[r] = pass ? 1 : 0;
      } else {
        f.w_hi_eff[r] = w_eff;
        f.pass_hi[r] = pass ? 1 : 0;
      }
    }
    const double ul = x - f.w_lo_eff[r];
    const double uh = f.w_hi_eff[r] - x;
    if (ul > 0.0 && uh > 0.0) f.s += ul * uh;
  }
  f.m = f.s / (f.s + p.epsilon);
  return f;
}

}  // namespace

void SoftAcamParams::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("naf: epsilon must be > 0");
  if (!(g_ratio > 0.0)) throw std::invalid_argument("naf: g_ratio must be > 0");
  if (static_cast<int>(bits.size()) != n_bits)
    throw std::invalid_argument("naf: bits size mismatch");
}

void NafConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("naf: epochs must be >= 1");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw std::invalid_argument("naf: lambdas must be >= 0");
  if (samples_per_dt < 1) throw std::invalid_argument("naf: samples_per_dt must be >= 1");
}

SoftAcamParams soft_params_from_compiled(const CompiledFunction& c) {
  SoftAcamParams p;
  p.n_bits = c.qspec.n_bits;
  p.domain_lo = c.qspec.in_lo;
  p.domain_hi = c.qspec.in_hi;
  p.g_ratio = (p.g_max - p.g_min) / (p.domain_hi - p.domain_lo);
  p.bits.resize(c.bits.size());
  for (std::size_t i = 0; i < c.bits.size(); ++i) {
    for (const auto& iv : c.bits[i].intervals) {
      p.bits[i].w_lo.push_back(iv.lo);
      p.bits[i].w_hi.push_back(iv.hi);
      p.bits[i].frozen_lo.push_back(0);
      p.bits[i].frozen_hi.push_back(0);
    }
  }
  p.validate();
  return p;
}

double soft_bit(const SoftAcamParams& p, int bit_slot, double x, const NoiseSpec& noise,
                std::uint64_t sample_index) {
  return forward_bit(p, bit_slot, x, noise, sample_index).m;
}

double soft_forward(const SoftAcamParams& p, double x, const NoiseSpec& noise,
                    std::uint64_t sample_index) {
  double y = 0.0;
  double b_prev = 0.0;
  for (int slot = 0; slot < p.n_bits; ++slot) {
    const double m = forward_bit(p, slot, x, noise, sample_index).m;
    const double b = slot == 0 ? m : (m - b_prev) * (m - b_prev);
    y += b * std::ldexp(1.0, p.n_bits - 1 - slot);
    b_prev = b;
  }
  return y;
}

SoftGradient soft_gradient(const SoftAcamParams& p, double x, double target_level,
                           const NoiseSpec& noise, std::uint64_t sample_index) {
  const int n = p.n_bits;
  std::vector<BitForward> fw(static_cast<std::size_t>(n));
  std::vector<double> m(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
  double y = 0.0;
  for (int slot = 0; slot < n; ++slot) {
    fw[slot] = forward_bit(p, slot, x, noise, sample_index);
    m[slot] = fw[slot].m;
    b[slot] = slot == 0 ? m[slot] : (m[slot] - b[slot - 1]) * (m[slot] - b[slot - 1]);
    y += b[slot] * std::ldexp(1.0, n - 1 - slot);
  }
  const double dy = 2.0 * (y - target_level);

  // backprop through the squared-difference decode, last slot first
  std::vector<double> g_b(static_cast<std::size_t>(n));
  g_b[n - 1] = dy * std::ldexp(1.0, 0);
  for (int slot = n - 2; slot >= 0; --slot)
    g_b[slot] = dy * std::ldexp(1.0, n - 1 - slot) -
                g_b[slot + 1] * 2.0 * (m[slot + 1] - b[slot]);

  SoftGradient grad;
  grad.d_bits.resize(static_cast<std::size_t>(n));
  for (int slot = 0; slot < n; ++slot) {
    const double g_m =
        slot == 0 ? g_b[0] : g_b[slot] * 2.0 * (m[slot] - b[slot - 1]);
    const auto& bp = p.bits[static_cast<std::size_t>(slot)];
    auto& gb = grad.d_bits[static_cast<std::size_t>(slot)];
    const std::size_t rows = bp.w_lo.size();
    gb.w_lo.assign(rows, 0.0);
    gb.w_hi.assign(rows, 0.0);
    const double dm_ds = p.epsilon / ((fw[slot].s + p.epsilon) * (fw[slot].s + p.epsilon));
    for (std::size_t r = 0; r < rows; ++r) {
      const double ul = x - fw[slot].w_lo_eff[r];
      const double uh = fw[slot].w_hi_eff[r] - x;
      if (ul <= 0.0 || uh <= 0.0) continue;  // ReLU subgradient 0 at and past kinks
      double glo = g_m * dm_ds * (-uh);
      double ghi = g_m * dm_ds * ul;
      if (!fw[slot].pass_lo[r]) glo = 0.0;
      if (!fw[slot].pass_hi[r]) ghi = 0.0;
      gb.w_lo[r] = glo;
      gb.w_hi[r] = ghi;
    }
  }
  return grad;
}

DtFinetuneResult finetune_dt(const CompiledFunction& c, int bit_slot, const NoiseSpec& noise,
                             const NafConfig& cfg, const std::vector<SiteKey>& frozen) {
  cfg.validate();
  DtFinetuneResult res;
  res.params = soft_params_from_compiled(c);
  SoftAcamParams& p = res.params;
  auto& bp = p.bits[static_cast<std::size_t>(bit_slot)];
  // Training-scale squash constant: with the bare division-guard epsilon the
  // match gradient is a delta spike no fixed-step SGD can sample. Widening it
  // to (mean interval width / 8)^2 gives every row a gradient zone that
  // tracks its own width; the returned thresholds are plain values, so the
  // deployed hard match is unaffected.
  if (!bp.w_lo.empty()) {
    double mean_width = 0.0;
    for (std::size_t r = 0; r < bp.w_lo.size(); ++r) mean_width += bp.w_hi[r] - bp.w_lo[r];
    mean_width /= static_cast<double>(bp.w_lo.size());
    const double e = mean_width / 8.0;
    p.epsilon = std::fmax(e * e, 1e-12);
  }
  for (const auto& site : frozen) {
    if (static_cast<int>(site.array) != bit_slot) continue;
    if (site.row < bp.frozen_lo.size()) {
      if (site.element == 0)
        bp.frozen_lo[site.row] = 1;
      else
        bp.frozen_hi[site.row] = 1;
    }
  }
  const double span = p.domain_hi - p.domain_lo;
  const double step = cfg.step_size > 0.0 ? cfg.step_size : 1e-3 * span;
  const auto& target_set = c.bits[static_cast<std::size_t>(bit_slot)];

  SoftAcamParams best = p;
  double best_loss = -1.0;
  int rising = 0;
  std::uint64_t sample_counter = 1;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_acc = 0.0;
    std::vector<double> acc_lo(bp.w_lo.size(), 0.0), acc_hi(bp.w_hi.size(), 0.0);
    int in_batch = 0;
    for (int i = 0; i < cfg.samples_per_dt; ++i, ++sample_counter) {
      const double u = uniform_at(cfg.seed, 0x646174, sample_counter, 0x78);
      const double x = p.domain_lo + span * u;
      const double target = target_set.contains(x) ? 1.0 : 0.0;
      const BitForward f = forward_bit(p, bit_slot, x, noise, sample_counter);
      const double err = f.m - target;
      loss_acc += err * err;
      const double dm_ds = p.epsilon / ((f.s + p.epsilon) * (f.s + p.epsilon));
      const double g_m = 2.0 * err;
      for (std::size_t r = 0; r < bp.w_lo.size(); ++r) {
        const double ul = x - f.w_lo_eff[r];
        const double uh = f.w_hi_eff[r] - x;
        if (ul <= 0.0 || uh <= 0.0) continue;
        if (f.pass_lo[r])
          acc_lo[r] += clip(g_m * dm_ds * (-uh), -kGradClip, kGradClip);
        if (f.pass_hi[r])
          acc_hi[r] += clip(g_m * dm_ds * ul, -kGradClip, kGradClip);
      }
      if (++in_batch == cfg.batch || i + 1 == cfg.samples_per_dt) {
        for (std::size_t r = 0; r < bp.w_lo.size(); ++r) {
          if (!bp.frozen_lo[r]) bp.w_lo[r] -= step * acc_lo[r] / in_batch;
          if (!bp.frozen_hi[r]) bp.w_hi[r] -= step * acc_hi[r] / in_batch;
          acc_lo[r] = 0.0;
          acc_hi[r] = 0.0;
        }
        in_batch = 0;
      }
    }
    const double epoch_loss = loss_acc / cfg.samples_per_dt;
    res.epoch_loss.push_back(epoch_loss);
    if (best_loss < 0.0 || epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best = p;
      rising = 0;
    } else if (++rising >= 5) {
      res.diverged = true;
      break;
    }
  }
  res.params = best;
  return res;
}

void apply_bit_params(AcamUnit& u, int bit_slot, const SoftAcamParams& p) {
  AcamArray& a = u.arrays[static_cast<std::size_t>(bit_slot)];
  const auto& bp = p.bits[static_cast<std::size_t>(bit_slot)];
  std::size_t param = 0;
  for (auto& row : a.rows) {
    if (!row.enabled) continue;
    if (param >= bp.w_lo.size()) break;
    AcamCell& cell = row.cells[0];
    cell.wildcard = false;
    // same closed-bound nudge the mapper applies: realize thresholds on the
    // inclusive side of each stored bound
    auto closed = [&u](double x, bool is_lo) {
      double g = u.mapping.bound_to_conductance(x);
      const double target = u.mapping.to_threshold(x);
      for (int i = 0; i < 8; ++i) {
        const double th = conductance_to_threshold(g, u.mapping.transfer);
        if (is_lo ? th <= target : th >= target) break;
        g = std::nextafter(g, is_lo ? 0.0 : 2.0 * kGMax);
      }
      return g;
    };
    cell.lo_g = bp.w_lo[param] <= u.mapping.domain_lo ? kGMin : closed(bp.w_lo[param], true);
    cell.hi_g = bp.w_hi[param] >= u.mapping.domain_hi ? kGMax : closed(bp.w_hi[param], false);
    ++param;
  }
}

double asl_loss(const std::vector<double>& y, const std::vector<double>& y_hat,
                const Matrix& w, const Matrix& eps_resid, double lambda1, double lambda2) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("asl_loss: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_hat[i];
    mse += d * d;
  }
  mse /= y.empty() ? 1.0 : static_cast<double>(y.size());
  double wmax = 0.0, emax = 0.0;
  for (double v : w.data) wmax = std::fmax(wmax, std::fabs(v));
  for (double v : eps_resid.data) emax = std::fmax(emax, std::fabs(v));
  return mse + lambda1 * wmax + lambda2 * emax;
}

CrossbarFinetuneResult finetune_crossbar(const Matrix& w0, const CrossbarTask& task,
                                         const NoiseSpec& noise, const NafConfig& cfg) {
  cfg.validate();
  if (task.x.cols != w0.rows || task.y.cols != w0.cols || task.x.rows != task.y.rows)
    throw std::invalid_argument("finetune_crossbar: task shapes do not match weights");
  CrossbarFinetuneResult res;
  res.w = w0;
  const std::size_t n = task.x.rows;
  const double w_bound = [&] {
    double m = 0.0;
    for (double v : w0.data) m = std::fmax(m, std::fabs(v));
    return std::fmax(m, 1e-9);
  }();
  const double g_scale = (kGMax - kGMin) / w_bound;
  const double step = cfg.step_size > 0.0 ? cfg.step_size : 1e-2;

  double best_loss = -1.0;
  Matrix best = res.w;
  int rising = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // fresh weight noise per epoch batch: raw residual eps, corrected readout
    Matrix eps(res.w.rows, res.w.cols);
    Matrix w_noisy = res.w;
    if (noise.enabled()) {
      for (std::size_t i = 0; i < res.w.data.size(); ++i) {
        const double g = kGMin + std::fabs(res.w.data[i]) * g_scale;
        SiteKey site{0x584241, 0, static_cast<std::uint32_t>(i / res.w.cols),
                     static_cast<std::uint32_t>(i % res.w.cols), 0};
        const double draw =
            normal_at(noise.seed, site_hash(site), static_cast<std::uint64_t>(epoch) + 1,
                      kStreamProg);
        eps.data[i] = noise.scale * sigma(g, noise.prog) * draw / g_scale;
        const double fluct =
            noise.scale * sigma(g, noise.fluct) *
            normal_at(noise.seed, site_hash(site), static_cast<std::uint64_t>(epoch) + 1,
                      kStreamFluct) /
            g_scale;
        // the 10x residual cell cancels most of eps; roundoff rides at 1/10
        w_noisy.data[i] = res.w.data[i] + eps.data[i] / 10.0 + fluct;
      }
    }
    Matrix y_hat = matmul(task.x, w_noisy);
    double mse = 0.0;
    Matrix resid(n, res.w.cols);
    for (std::size_t i = 0; i < y_hat.data.size(); ++i) {
      resid.data[i] = y_hat.data[i] - task.y.data[i];
      mse += resid.data[i] * resid.data[i];
    }
    mse /= static_cast<double>(y_hat.data.size());
    double wmax = 0.0, emax = 0.0;
    std::size_t wmax_idx = 0, emax_idx = 0;
    for (std::size_t i = 0; i < res.w.data.size(); ++i) {
      if (std::fabs(res.w.data[i]) > wmax) {
        wmax = std::fabs(res.w.data[i]);
        wmax_idx = i;
      }
      if (std::fabs(eps.data[i]) > emax) {
        emax = std::fabs(eps.data[i]);
        emax_idx = i;
      }
    }
    const double loss = mse + cfg.lambda1 * wmax + cfg.lambda2 * emax;
    res.epoch_loss.push_back(loss);

    // dL/dW = 2/N X^T resid + subgradients of the two max-norm terms
    Matrix grad = matmul(transpose(task.x), resid);
    const double inv = 2.0 / static_cast<double>(y_hat.data.size());
    for (auto& v : grad.data) v *= inv;
    if (cfg.lambda1 > 0.0 && wmax > 0.0)
      grad.data[wmax_idx] += cfg.lambda1 * (res.w.data[wmax_idx] > 0 ? 1.0 : -1.0);
    if (cfg.lambda2 > 0.0 && emax > 0.0 && noise.enabled()) {
      // |eps| grows with sigma_prog(G(w)): push the responsible weight down
      const double g = kGMin + std::fabs(res.w.data[emax_idx]) * g_scale;
      if (g < noise.prog.c) {
        const double dsig_dw = noise.prog.a * sigma(g, noise.prog) / g * g_scale;
        grad.data[emax_idx] += cfg.lambda2 * dsig_dw *
                               (res.w.data[emax_idx] > 0 ? 1.0 : -1.0) *
                               std::fabs(eps.data[emax_idx]) /
                               std::fmax(noise.scale * sigma(g, noise.prog) / g_scale, 1e-30);
      }
    }
    for (std::size_t i = 0; i < res.w.data.size(); ++i) res.w.data[i] -= step * grad.data[i];

    if (best_loss < 0.0 || loss < best_loss) {
      best_loss = loss;
      best = res.w;
      rising = 0;
    } else if (++rising >= 5) {
      res.diverged = true;
      break;
    }
  }
  res.w = best;
  return res;
}

}  // namespace nldpe
