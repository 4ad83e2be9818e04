#include <cmath>
#include <vector>

#include "doctest.h"
#include "nldpe/noise.hpp"
#include "oracles.hpp"

using namespace nldpe;

TEST_SUITE("noise") {

TEST_CASE("sigma rises with conductance then saturates at the clip point") {
  const NoiseSpec s = default_noise_spec();
  double prev = 0.0;
  for (double g = 0.0; g <= kGMax; g += 0.5) {
    const double v = sigma(g, s.prog);
    CHECK(v >= prev - 1e-15);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    prev = v;
  }
  CHECK(sigma(s.prog.c, s.prog) == doctest::Approx(sigma(kGMax, s.prog)));
}

TEST_CASE("default programming sigma tops out near 0.4 uS") {
  const NoiseSpec s = default_noise_spec();
  CHECK(sigma(kGMax, s.prog) == doctest::Approx(0.4).epsilon(0.01));
}

TEST_CASE("scale zero is the noise-free switch") {
  NoiseSpec s = default_noise_spec(99);
  s.scale = 0.0;
  SiteKey site{1, 2, 3, 4, 0};
  for (double g : {0.01, 1.0, 75.0, 150.0})
    CHECK(sample_conductance(g, s, site, 7) == doctest::Approx(g));
}

TEST_CASE("sampling is deterministic and order-independent") {
  const NoiseSpec s = default_noise_spec(1234);
  SiteKey a{1, 0, 5, 9, 1}, b{2, 3, 1, 0, 0};
  const double a0 = sample_conductance(80.0, s, a, 0);
  const double b7 = sample_conductance(40.0, s, b, 7);
  // reversed evaluation order reproduces the same draws
  CHECK(sample_conductance(40.0, s, b, 7) == b7);
  CHECK(sample_conductance(80.0, s, a, 0) == a0);
}

TEST_CASE("write component is fixed per site, reads fluctuate around it") {
  const NoiseSpec s = default_noise_spec(42);
  SiteKey site{9, 1, 2, 3, 0};
  const double programmed = programmed_conductance(100.0, s, site);
  CHECK(programmed_conductance(100.0, s, site) == programmed);
  std::vector<double> reads;
  for (int r = 0; r < 10000; ++r) reads.push_back(sample_conductance(100.0, s, site, r));
  const double sd = std::sqrt(oracles::variance(reads));
  CHECK(oracles::mean(reads) == doctest::Approx(programmed).epsilon(0.01));
  CHECK(sd == doctest::Approx(sigma(programmed, s.fluct)).epsilon(0.05));
}

TEST_CASE("transfer is strictly monotone and inverts cleanly") {
  const NoiseSpec s = default_noise_spec();
  double prev = conductance_to_threshold(kGMin, s.acam_transfer);
  for (double g = kGMin + 0.01; g <= kGMax; g += 0.37) {
    const double th = conductance_to_threshold(g, s.acam_transfer);
    CHECK(th > prev);
    prev = th;
    const double back = threshold_to_conductance(th, s.acam_transfer);
    CHECK(std::fabs(back - g) / g <= 1e-9);
  }
  CHECK_THROWS_AS(conductance_to_threshold(0.0, s.acam_transfer), std::domain_error);
}

TEST_CASE("threshold span endpoints define the data-line window") {
  const NoiseSpec s = default_noise_spec();
  const double lo = conductance_to_threshold(kGMin, s.acam_transfer);
  const double hi = conductance_to_threshold(kGMax, s.acam_transfer);
  CHECK(lo < hi);
  // analytic derivative of exp(a log g + b): a * (th - c) / g > 0 for a > 0
  const double g = 10.0;
  const double th = conductance_to_threshold(g, s.acam_transfer);
  const double h = 1e-6;
  const double numeric =
      (conductance_to_threshold(g + h, s.acam_transfer) - th) / h;
  const double analytic = s.acam_transfer.a * (th - s.acam_transfer.c) / g;
  CHECK(numeric == doctest::Approx(analytic).epsilon(1e-4));
}

TEST_CASE("sigma handles G=0 via the smallest positive conductance") {
  const NoiseSpec s = default_noise_spec();
  CHECK(sigma(0.0, s.prog) >= 0.0);
  CHECK(std::isfinite(sigma(0.0, s.prog)));
}

TEST_CASE("fault map lookup") {
  FaultMap fm;
  fm.entries.push_back({SiteKey{5, 1, 2, 3, 0}, FaultMode::StuckHighG});
  CHECK(fm.pinned(5, 1, 2, 3, 0) == doctest::Approx(kGMax));
  CHECK(fm.pinned(5, 1, 2, 3, 1) < 0.0);
  CHECK(fm.pinned(4, 1, 2, 3, 0) < 0.0);
}

TEST_CASE("noise spec validation") {
  NoiseSpec s = default_noise_spec();
  s.scale = -1.0;
  CHECK_THROWS(s.validate());
  s = default_noise_spec();
  s.prog.c = 0.0;
  CHECK_THROWS(s.validate());
}

}  // TEST_SUITE
