#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "mmhcan/errors.hpp"
#include "mmhcan/stft.hpp"
#include "oracles.hpp"

using namespace mmhcan;

using oracle::dft;

TEST(Stft, FftMatchesNaiveDft) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (std::size_t n : {1u, 2u, 8u, 64u, 256u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {g(rng), g(rng)};
    auto ref = dft(x);
    fft(x);
    for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(x[k] - ref[k]), 1e-9);
  }
  std::vector<std::complex<double>> bad(6);
  EXPECT_THROW(fft(bad), ContractError);
}

TEST(Stft, WindowsArePeriodic) {
  auto hann = make_window(WindowKind::kHann, 8);
  EXPECT_NEAR(hann[0], 0, 1e-15);
  EXPECT_NEAR(hann[4], 1, 1e-15);
  EXPECT_NEAR(hann[2], 0.5, 1e-15);
  EXPECT_NEAR(hann[1], hann[7], 1e-15);
  auto bh = make_window(WindowKind::kBlackmanHarris, 16);
  EXPECT_NEAR(bh[0], 0.35875 - 0.48829 + 0.14128 - 0.01168, 1e-12);
  EXPECT_NEAR(bh[8], 1.0, 1e-12);
}

TEST(Stft, FrameAndBinCounts) {
  WindowSpec w{WindowKind::kHann, 64, 16, 128, 0};
  std::vector<double> x(300, 1.0);
  auto f = stft(x, w);
  EXPECT_EQ(f.frames, (300 - 64) / 16 + 1);
  EXPECT_EQ(f.bins, 65u);
  std::vector<double> short_x(10, 1.0);
  EXPECT_THROW(stft(short_x, w), ContractError);
  WindowSpec bad{WindowKind::kHann, 64, 16, 96, 0};
  EXPECT_THROW(validate(bad), ContractError);
}

TEST(Stft, ToneMatchesPerFrameDft) {
  const double fs = 1000;
  WindowSpec w{WindowKind::kHann, 100, 25, 128, 0};
  std::vector<double> x(400);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 62.5 * i / fs) + 0.3;
  auto frames = stft(x, w);
  auto win = make_window(w.kind, w.length);
  for (std::size_t f = 0; f < frames.frames; ++f) {
    std::vector<std::complex<double>> buf(w.fft_size);
    for (std::size_t i = 0; i < w.length; ++i) buf[i] = x[f * w.hop + i] * win[i];
    auto ref = dft(buf);
    for (std::size_t b = 0; b < frames.bins; ++b) EXPECT_LT(std::abs(frames(f, b) - ref[b]), 1e-9);
  }
}

TEST(Stft, BandLimitCropsBins) {
  WindowSpec w{WindowKind::kHann, 128, 32, 256, 100};
  std::vector<double> x(512, 0.5);
  auto mag = magnitude(stft(x, w), w, 1000);
  // resolution 1000/256 Hz: bins 0..25 lie at or below 100 Hz
  EXPECT_EQ(mag.cols, 26u);
  EXPECT_NEAR(mag(0, 0), 0.5 * 64, 1e-9);
}

TEST(Stft, LogCompressAndResize) {
  RealMatrix m{2, 2, {0, 1, 2, 3}};
  auto l = log_compress(m);
  EXPECT_DOUBLE_EQ(l(1, 1), std::log1p(3.0));
  RealMatrix neg{1, 1, {-1}};
  EXPECT_THROW(log_compress(neg), ContractError);
  auto r = resize_bilinear(m, 3, 3);
  EXPECT_DOUBLE_EQ(r(0, 0), 0);
  EXPECT_DOUBLE_EQ(r(2, 2), 3);
  EXPECT_DOUBLE_EQ(r(1, 1), 1.5);
  EXPECT_DOUBLE_EQ(r(0, 1), 0.5);
}

TEST(Stft, ImageIsUnitRangeAndConstantMapsToZero) {
  RealMatrix m{3, 4, {1, 5, 2, 8, 3, 3, 0, 4, 6, 2, 7, 1}};
  auto img = to_image(m, 8, 8);
  double lo = 1, hi = 0;
  for (double v : img.values.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_DOUBLE_EQ(lo, 0);
  EXPECT_DOUBLE_EQ(hi, 1);
  RealMatrix flat{2, 2, {3, 3, 3, 3}};
  for (double v : to_image(flat, 4, 4).values.data) EXPECT_EQ(v, 0);
}

TEST(Stft, SpectrogramMetadata) {
  WindowSpec w{WindowKind::kHann, 128, 4, 128, 0};
  std::vector<double> x(256);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * i);
  auto s = spectrogram(x, w, 1000, 64, 64, 2);
  EXPECT_EQ(s.values.rows, 64u);
  EXPECT_EQ(s.values.cols, 64u);
  EXPECT_DOUBLE_EQ(s.freq_resolution_hz, 1000.0 / 128);
  EXPECT_DOUBLE_EQ(s.time_step_s, 0.004);
  EXPECT_EQ(s.source_label, 2);
}

TEST(Stft, PresetResolutionsByArithmetic) {
  struct Expected {
    const char* name;
    double fs;
    std::size_t length, fft;
    double band;
  };
  for (auto e : {Expected{"rotor", 10000, 2000, 2048, 200}, Expected{"bearing", 51200, 256, 512, 10000},
                 Expected{"stator-vib", 25600, 512, 1024, 2500},
                 Expected{"stator-cur", 100000, 5000, 8192, 1000}}) {
    auto p = regime_preset(e.name);
    EXPECT_EQ(p.sample_rate_hz, e.fs);
    EXPECT_EQ(p.window.length, e.length);
    EXPECT_EQ(p.window.fft_size, e.fft);
    EXPECT_EQ(p.window.band_limit_hz, e.band);
    EXPECT_NO_THROW(validate(p.window));
  }
  auto rotor = regime_preset("rotor");
  EXPECT_EQ(rotor.sample_rate_hz / rotor.window.fft_size, 10000.0 / 2048);
  EXPECT_NEAR(rotor.sample_rate_hz / rotor.window.fft_size, 4.88, 0.005);
  EXPECT_EQ(rotor.window.hop, 500u);
  EXPECT_EQ(regime_preset("bearing").window.kind, WindowKind::kBlackmanHarris);
  EXPECT_THROW(regime_preset("nope"), ConfigError);
}

TEST(Stft, CacheRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "mmhcan_spec_cache.bin";
  Spectrogram s;
  s.values = RealMatrix{2, 3, {0, 0.1, 0.2, 1.0 / 3, 0.5, 1}};
  s.freq_resolution_hz = 7.8125;
  s.time_step_s = 0.004;
  s.source_label = 3;
  write_spectrogram(s, path);
  auto back = read_spectrogram(path);
  EXPECT_EQ(back.values.data, s.values.data);
  EXPECT_EQ(back.values.rows, 2u);
  EXPECT_EQ(back.freq_resolution_hz, s.freq_resolution_hz);
  EXPECT_EQ(back.source_label, 3);
}
