#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmhcan/precision.hpp"

MMHCAN_NAMESPACE_BEGIN

enum class WindowKind { kHann, kBlackmanHarris };

WindowKind parse_window_kind(const std::string& name);
std::string to_string(WindowKind kind);

struct WindowSpec {
  WindowKind kind = WindowKind::kHann;
  std::size_t length = 128;
  std::size_t hop = 4;
  std::size_t fft_size = 128;  // power of two, >= length
  double band_limit_hz = 0;    // 0 keeps the full one-sided spectrum
};

void validate(const WindowSpec& w);

// Periodic window of the given length.
std::vector<double> make_window(WindowKind kind, std::size_t length);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::span<std::complex<double>> data);

struct ComplexFrames {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> data;  // frames x bins
  std::complex<double> operator()(std::size_t f, std::size_t b) const {
    return data[f * bins + b];
  }
};

// One-sided STFT; frame count = floor((len - length)/hop) + 1, bins =
// fft_size/2 + 1 (before any band crop).
ComplexFrames stft(std::span<const double> signal, const WindowSpec& w);

// Magnitudes with bins above band_limit_hz dropped.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

RealMatrix magnitude(const ComplexFrames& frames, const WindowSpec& w,
                     double sample_rate_hz);

// log(1 + x); ContractError on negative entries.
RealMatrix log_compress(const RealMatrix& mag);

// Align-corners bilinear resampling.
RealMatrix resize_bilinear(const RealMatrix& in, std::size_t rows, std::size_t cols);

struct Spectrogram {
  RealMatrix values;  // frames x bins, entries in [0, 1]
  double freq_resolution_hz = 0;
  double time_step_s = 0;
  int source_label = 0;
};

// Resize then min-max scale; constant input maps to zeros.
Spectrogram to_image(const RealMatrix& values, std::size_t rows, std::size_t cols);

// Full preprocessing path: stft -> magnitude/crop -> log -> image.
Spectrogram spectrogram(std::span<const double> segment, const WindowSpec& w,
                        double sample_rate_hz, std::size_t rows, std::size_t cols,
                        int label = 0);

struct RegimePreset {
  std::string name;
  WindowSpec window;
  double sample_rate_hz;
  std::size_t segment_length;
};

// Presets `rotor`, `bearing`, `stator-vib`, `stator-cur`.
RegimePreset regime_preset(const std::string& name);
std::vector<std::string> regime_preset_names();

// Cache file: "MMHCAN-SPEC-1\n", one JSON header line, then rows*cols
// little-endian float64 values.
void write_spectrogram(const Spectrogram& s, const std::filesystem::path& path);
Spectrogram read_spectrogram(const std::filesystem::path& path);

MMHCAN_NAMESPACE_END
