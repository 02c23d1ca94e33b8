#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mmhcan/errors.hpp"
#include "mmhcan/perturb.hpp"
#include "mmhcan/signal.hpp"

using namespace mmhcan;

namespace {

// One-sided amplitude at a frequency that completes whole cycles in the segment.
double tone_amplitude(const std::vector<double>& x, double f, double fs) {
  double re = 0, im = 0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    re += x[n] * std::cos(2 * std::numbers::pi * f * n / fs);
    im -= x[n] * std::sin(2 * std::numbers::pi * f * n / fs);
  }
  return 2 * std::hypot(re, im) / static_cast<double>(x.size());
}

std::vector<double> benchmark_segment(std::uint64_t seed) {
  auto specs = default_benchmark_classes(0.2);
  return normalize(synthesize(specs[seed % 4], 0.256, 1000, seed).samples).values;
}

}  // namespace

TEST(Perturb, GaussianHitsTargetSnr) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = benchmark_segment(seed);
    auto y = perturb(x, perturbation::Gaussian{10}, seed);
    EXPECT_NEAR(snr_db(x, y), 10.0, 0.1);
    auto z = perturb(x, perturbation::Gaussian{20}, seed);
    EXPECT_NEAR(snr_db(x, z), 20.0, 0.1);
  }
}

TEST(Perturb, InfiniteSnrIsIdentity) {
  auto x = benchmark_segment(1);
  EXPECT_EQ(perturb(x, perturbation::Gaussian{std::numeric_limits<double>::infinity()}, 3), x);
}

TEST(Perturb, HarmonicsAtRequestedRelativeAmplitude) {
  const double fs = 1000, f0 = 62.5;  // 16 whole cycles in 256 samples
  std::vector<double> x(256);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = 1.7 * std::sin(2 * std::numbers::pi * f0 * n / fs + 0.4);
  perturbation::Harmonics h;
  h.base_freq_hz = f0;
  h.sample_rate_hz = fs;
  auto y = perturb(x, h, 0);
  double fund = tone_amplitude(y, f0, fs);
  EXPECT_NEAR(fund, 1.7, 1e-9);
  for (int k : {3, 5, 7}) EXPECT_NEAR(tone_amplitude(y, k * f0, fs) / fund, 0.2, 1e-3);
  EXPECT_NEAR(tone_amplitude(y, 2 * f0, fs), 0.0, 1e-9);
}

TEST(Perturb, ToneFitRecoversAmplitudeAndPhase) {
  std::vector<double> x(300);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = 0.8 * std::cos(2 * std::numbers::pi * 60 * n / 1000.0 - 1.1);
  auto fit = fit_tone(x, 60, 1000);
  EXPECT_NEAR(fit.amplitude, 0.8, 1e-12);
  EXPECT_NEAR(fit.phase, 1.1, 1e-12);
}

TEST(Perturb, SpikesTouchExactCountAtFixedAmplitude) {
  auto x = benchmark_segment(2);
  x.resize(250);
  double peak = 0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  auto y = perturb(x, perturbation::Spikes{0.2, 0.02}, 5);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == x[i]) continue;
    ++changed;
    EXPECT_NEAR(std::abs(y[i] - x[i]), 0.2 * peak, 1e-12);
  }
  EXPECT_EQ(changed, 5u);
  EXPECT_EQ(perturb(x, perturbation::Spikes{0.2, 0.02}, 5), y);
}

TEST(Perturb, KindsAndErrors) {
  for (const char* k : {"gaussian", "harmonics", "spikes"}) EXPECT_EQ(kind_name(make_perturbation(k)), k);
  EXPECT_THROW(make_perturbation("dropout"), ConfigError);
  auto x = benchmark_segment(0);
  EXPECT_THROW(perturb(x, perturbation::Spikes{0.2, 2.0}, 0), ConfigError);
  perturbation::Harmonics h;
  h.orders = {1};
  EXPECT_THROW(perturb(x, h, 0), ConfigError);
}
