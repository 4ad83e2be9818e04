#include "nldpe/crossbar.hpp"

#include <cmath>
#include <stdexcept>

namespace nldpe {

namespace {

constexpr double kResidualScale = 10.0;

double max_abs(const Matrix& w) {
  double m = 0.0;
  for (double v : w.data) m = std::fmax(m, std::fabs(v));
  return m;
}

std::vector<double> column_scales(const Matrix& w, double x_max, double w_max) {
  std::vector<double> s(w.cols, 0.0);
  for (std::size_t j = 0; j < w.cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows; ++i) acc += std::fabs(w.at(i, j));
    s[j] = x_max * std::fmax(acc, w_max);  // floor: one full-scale weight
  }
  return s;
}

/// Program one cell: target -> achieved, honoring stuck pins (a pinned cell
/// ignores the write entirely, which is what program-and-verify observes).
double write_cell(double g_target, const CrossbarImage& img, const NoiseSpec& noise,
                  std::uint32_t plane, std::size_t r, std::size_t c) {
  const double pin = img.faults.pinned(img.image_id, plane, static_cast<std::uint32_t>(r),
                                       static_cast<std::uint32_t>(c), 0);
  if (pin >= 0.0) return pin;
  SiteKey site{img.image_id, plane, static_cast<std::uint32_t>(r),
               static_cast<std::uint32_t>(c), 0};
  return programmed_conductance(g_target, noise, site);
}

double read_cell(const CrossbarImage& img, const NoiseSpec& noise, std::uint32_t plane,
                 std::size_t r, std::size_t c, std::uint64_t read_index) {
  const double achieved = img.planes[plane].at(r, c);
  const double pin = img.faults.pinned(img.image_id, plane, static_cast<std::uint32_t>(r),
                                       static_cast<std::uint32_t>(c), 0);
  if (pin >= 0.0) return pin;  // stuck cells do not fluctuate
  if (!noise.enabled()) return achieved;
  const double sf = noise.scale * sigma(achieved, noise.fluct);
  SiteKey site{img.image_id, plane, static_cast<std::uint32_t>(r),
               static_cast<std::uint32_t>(c), 0};
  const double g = achieved + sf * normal_at(noise.seed, site_hash(site), read_index, kStreamFluct);
  return g < kGMin ? kGMin : (g > kGMax ? kGMax : g);
}

}  // namespace

std::size_t CrossbarImage::slice_count() const {
  return scheme == SliceScheme::ASL ? 1 : planes.size() / 2;
}

void CrossbarImage::validate_shape() const {
  if (rows == 0 || cols == 0 || rows > 256 || cols > 256)
    throw std::invalid_argument("crossbar: shape must be within (256, 256)");
}

CrossbarImage program_dsl(const Matrix& w, const QuantSpec& q, const NoiseSpec& noise,
                          std::uint64_t image_id, const FaultMap& faults, int bits_per_cell,
                          double x_max) {
  q.validate();
  const double bound = std::fmax(std::fabs(q.out_lo), std::fabs(q.out_hi));
  if (max_abs(w) > bound) throw std::out_of_range("program_dsl: weight outside spec range");
  if (q.n_bits % bits_per_cell != 0)
    throw std::invalid_argument("program_dsl: n_bits must be a multiple of bits_per_cell");

  CrossbarImage img;
  img.rows = w.rows;
  img.cols = w.cols;
  img.scheme = SliceScheme::DSL;
  img.wspec = q;
  img.w_max = bound;
  img.x_max = x_max;
  img.bits_per_cell = bits_per_cell;
  img.image_id = image_id;
  img.faults = faults;
  img.validate_shape();
  img.col_scale = column_scales(w, x_max, img.w_max);

  const int slices = q.n_bits / bits_per_cell;
  const std::uint32_t side_levels = (1u << q.n_bits) - 1;
  const std::uint32_t cell_levels = (1u << bits_per_cell) - 1;
  img.planes.assign(static_cast<std::size_t>(2 * slices), Matrix(w.rows, w.cols));

  for (std::size_t r = 0; r < w.rows; ++r) {
    for (std::size_t c = 0; c < w.cols; ++c) {
      const double v = w.at(r, c);
      const std::uint32_t pos_level = static_cast<std::uint32_t>(
          std::llround(std::fmax(v, 0.0) / bound * side_levels));
      const std::uint32_t neg_level = static_cast<std::uint32_t>(
          std::llround(std::fmax(-v, 0.0) / bound * side_levels));
      for (int k = 0; k < slices; ++k) {
        const std::uint32_t pv = (pos_level >> (k * bits_per_cell)) & cell_levels;
        const std::uint32_t nv = (neg_level >> (k * bits_per_cell)) & cell_levels;
        const double pg = kGMin + static_cast<double>(pv) / cell_levels * (kGMax - kGMin);
        const double ng = kGMin + static_cast<double>(nv) / cell_levels * (kGMax - kGMin);
        const auto pos_plane = static_cast<std::uint32_t>(2 * k);
        const auto neg_plane = static_cast<std::uint32_t>(2 * k + 1);
        img.planes[pos_plane].at(r, c) = write_cell(pg, img, noise, pos_plane, r, c);
        img.planes[neg_plane].at(r, c) = write_cell(ng, img, noise, neg_plane, r, c);
      }
    }
  }
  return img;
}

CrossbarImage program_asl(const Matrix& w, const NoiseSpec& noise, std::uint64_t image_id,
                          const FaultMap& faults, double w_max, double x_max) {
  CrossbarImage img;
  img.rows = w.rows;
  img.cols = w.cols;
  img.scheme = SliceScheme::ASL;
  img.w_max = w_max > 0.0 ? w_max : std::fmax(max_abs(w), 1e-12);
  img.x_max = x_max;
  img.image_id = image_id;
  img.faults = faults;
  img.validate_shape();
  img.col_scale = column_scales(w, x_max, img.w_max);
  img.planes.assign(4, Matrix(w.rows, w.cols));

  const double span = kGMax - kGMin;
  const double scale = span / img.w_max;  // uS per weight unit
  for (std::size_t r = 0; r < w.rows; ++r) {
    for (std::size_t c = 0; c < w.cols; ++c) {
      const double v = w.at(r, c);
      const double pos_t = kGMin + std::fmax(v, 0.0) * scale;
      const double neg_t = kGMin + std::fmax(-v, 0.0) * scale;
      // program-and-verify over the differential pair: each write absorbs
      // what the other one missed (continuous values only)
      double pos_a = write_cell(pos_t, img, noise, 0, r, c);
      const double neg_shifted =
          std::fmin(std::fmax(neg_t + (pos_a - pos_t), kGMin), kGMax);
      const double neg_a = write_cell(neg_shifted, img, noise, 2, r, c);
      if (neg_a != neg_shifted) {
        // second verify pass: re-target the positive cell around the miss
        const double pos_re =
            std::fmin(std::fmax(pos_t + (neg_a - neg_t), kGMin), kGMax);
        pos_a = write_cell(pos_re, img, noise, 0, r, c);
      }
      img.planes[0].at(r, c) = pos_a;
      img.planes[2].at(r, c) = neg_a;
      // verified residual of the pair, stored 10x on whichever side corrects
      // it; a stuck residual cell is known up front and the healthy side
      // re-targets around it
      const double eps = (pos_a - neg_a) - (pos_t - neg_t);
      const double rp_pin = img.faults.pinned(img.image_id, 1, static_cast<std::uint32_t>(r),
                                              static_cast<std::uint32_t>(c), 0);
      const double rn_pin = img.faults.pinned(img.image_id, 3, static_cast<std::uint32_t>(r),
                                              static_cast<std::uint32_t>(c), 0);
      double res_pos_t = kGMin, res_neg_t = kGMin;
      if (rp_pin >= 0.0 && rn_pin < 0.0) {
        res_neg_t = rp_pin + kResidualScale * eps;
      } else if (rn_pin >= 0.0 && rp_pin < 0.0) {
        res_pos_t = rn_pin - kResidualScale * eps;
      } else {
        (eps <= 0.0 ? res_pos_t : res_neg_t) = kGMin + kResidualScale * std::fabs(eps);
      }
      if (res_pos_t < kGMin || res_pos_t > kGMax || res_neg_t < kGMin || res_neg_t > kGMax)
        ++img.residual_clamp_count;
      res_pos_t = std::fmin(std::fmax(res_pos_t, kGMin), kGMax);
      res_neg_t = std::fmin(std::fmax(res_neg_t, kGMin), kGMax);
      img.planes[1].at(r, c) = write_cell(res_pos_t, img, noise, 1, r, c);
      img.planes[3].at(r, c) = write_cell(res_neg_t, img, noise, 3, r, c);
    }
  }
  return img;
}

CrossbarImage identity_image(std::size_t n, const NoiseSpec& noise, std::uint64_t image_id) {
  Matrix eye(n, n);
  for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = 1.0;
  CrossbarImage img = program_asl(eye, noise, image_id, {}, 1.0, 1.0);
  img.is_identity = true;
  return img;
}

Matrix effective_weights(const CrossbarImage& img, const NoiseSpec& noise,
                         std::uint64_t read_index) {
  Matrix w(img.rows, img.cols);
  if (img.scheme == SliceScheme::ASL) {
    const double scale = (kGMax - kGMin) / img.w_max;
    for (std::size_t r = 0; r < img.rows; ++r) {
      for (std::size_t c = 0; c < img.cols; ++c) {
        const double gp = read_cell(img, noise, 0, r, c, read_index);
        const double rp = read_cell(img, noise, 1, r, c, read_index);
        const double gn = read_cell(img, noise, 2, r, c, read_index);
        const double rn = read_cell(img, noise, 3, r, c, read_index);
        const double diff = (gp - gn) + ((rp - rn) / kResidualScale);
        w.at(r, c) = diff / scale;
      }
    }
    return w;
  }
  const int slices = static_cast<int>(img.slice_count());
  const std::uint32_t side_levels = (1u << img.wspec.n_bits) - 1;
  const std::uint32_t cell_levels = (1u << img.bits_per_cell) - 1;
  const double span = kGMax - kGMin;
  for (std::size_t r = 0; r < img.rows; ++r) {
    for (std::size_t c = 0; c < img.cols; ++c) {
      double acc = 0.0;  // signed level, shift-and-add over slices
      for (int k = 0; k < slices; ++k) {
        const double gp = read_cell(img, noise, static_cast<std::uint32_t>(2 * k), r, c, read_index);
        const double gn =
            read_cell(img, noise, static_cast<std::uint32_t>(2 * k + 1), r, c, read_index);
        const double digit = (gp - gn) / span * cell_levels;
        acc += std::ldexp(digit, k * img.bits_per_cell);
      }
      w.at(r, c) = acc / side_levels * img.w_max;
    }
  }
  return w;
}

VmmResult vmm(const CrossbarImage& img, const std::vector<double>& x, const NoiseSpec& noise,
              int reads, std::uint64_t read_base, RunLedger* ledger) {
  if (x.size() != img.rows) throw std::invalid_argument("vmm: input length != rows");
  if (reads < 1) throw std::invalid_argument("vmm: reads must be >= 1");
  if (ledger != nullptr) {
    ledger->add(EventKind::DacConversion, img.rows);
    ledger->add(EventKind::CrossbarColumnRead,
                static_cast<std::uint64_t>(img.cols) * static_cast<std::uint64_t>(reads));
    ledger->add(EventKind::InputBufferAccess, img.rows);
    ledger->add(EventKind::OutputBufferAccess, img.cols);
  }
  VmmResult out;
  out.analog_out.assign(img.cols, 0.0);
  for (int r = 0; r < reads; ++r) {
    const Matrix w = effective_weights(img, noise, read_base + static_cast<std::uint64_t>(r));
    for (std::size_t j = 0; j < img.cols; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < img.rows; ++i) acc += x[i] * w.at(i, j);
      out.analog_out[j] += acc / img.col_scale[j];
    }
  }
  for (auto& v : out.analog_out) v /= reads;
  return out;
}

void inject_faults(CrossbarImage& img, const FaultMap& fm) {
  for (const auto& e : fm.entries) {
    if (e.site.image != img.image_id) continue;
    if (e.site.array >= img.planes.size() || e.site.row >= img.rows || e.site.col >= img.cols)
      throw std::out_of_range("inject_faults: bad crossbar cell address");
    bool dup = false;
    for (const auto& have : img.faults.entries)
      dup |= have.site.image == e.site.image && have.site.array == e.site.array &&
             have.site.row == e.site.row && have.site.col == e.site.col;
    if (!dup) img.faults.entries.push_back(e);
    img.planes[e.site.array].at(e.site.row, e.site.col) =
        e.mode == FaultMode::StuckLowG ? kGMin : kGMax;
  }
}

CrossbarImage reprogram(const CrossbarImage& img, const Matrix& w, const NoiseSpec& noise) {
  if (img.scheme == SliceScheme::DSL)
    return program_dsl(w, img.wspec, noise, img.image_id, img.faults, img.bits_per_cell,
                       img.x_max);
  return program_asl(w, noise, img.image_id, img.faults, img.w_max, img.x_max);
}

}  // namespace nldpe
