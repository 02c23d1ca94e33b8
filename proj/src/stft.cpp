#include "mmhcan/stft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "mmhcan/errors.hpp"

MMHCAN_NAMESPACE_BEGIN

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr const char* kSpectrogramMagic = "MMHCAN-SPEC-1";

// hop = length - round(overlap * length)
std::size_t hop_for_overlap(std::size_t length, double overlap) {
  return length - static_cast<std::size_t>(std::llround(overlap * length));
}
}  // namespace

WindowKind parse_window_kind(const std::string& name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "blackman_harris") return WindowKind::kBlackmanHarris;
  throw ConfigError("unknown window kind '" + name + "'");
}

std::string to_string(WindowKind kind) {
  return kind == WindowKind::kHann ? "hann" : "blackman_harris";
}

void validate(const WindowSpec& w) {
  if (!(w.hop > 0 && w.hop <= w.length && w.length <= w.fft_size)) {
    throw ContractError("window spec needs 0 < hop <= length <= fft_size");
  }
  if (!std::has_single_bit(w.fft_size)) {
    throw ContractError("fft_size must be a power of two, got " +
                        std::to_string(w.fft_size));
  }
  if (w.band_limit_hz < 0) throw ContractError("band_limit_hz must be >= 0");
}

std::vector<double> make_window(WindowKind kind, std::size_t length) {
  std::vector<double> w(length);
  const double n = static_cast<double>(length);
  for (std::size_t i = 0; i < length; ++i) {
    double x = kTwoPi * static_cast<double>(i) / n;
    if (kind == WindowKind::kHann) {
      w[i] = 0.5 - 0.5 * std::cos(x);
    } else {
      w[i] = 0.35875 - 0.48829 * std::cos(x) + 0.14128 * std::cos(2 * x) -
             0.01168 * std::cos(3 * x);
    }
  }
  return w;
}

void fft(std::span<std::complex<double>> a) {
  const std::size_t n = a.size();
  if (n == 0 || !std::has_single_bit(n)) {
    throw ContractError("fft size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -kTwoPi / static_cast<double>(len);
    std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles evaluated directly rather than by recurrence to limit drift.
      std::complex<double> wk(std::cos(ang * k), std::sin(ang * k));
      for (std::size_t i = k; i < n; i += len) {
        auto u = a[i];
        auto v = a[i + half] * wk;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
}

ComplexFrames stft(std::span<const double> signal, const WindowSpec& w) {
  validate(w);
  if (signal.size() < w.length) {
    throw ContractError("segment of " + std::to_string(signal.size()) +
                        " samples is shorter than window " +
                        std::to_string(w.length));
  }
  auto window = make_window(w.kind, w.length);
  ComplexFrames out;
  out.frames = (signal.size() - w.length) / w.hop + 1;
  out.bins = w.fft_size / 2 + 1;
  out.data.resize(out.frames * out.bins);
  std::vector<std::complex<double>> buf(w.fft_size);
  for (std::size_t f = 0; f < out.frames; ++f) {
    std::fill(buf.begin(), buf.end(), std::complex<double>());
    for (std::size_t i = 0; i < w.length; ++i) {
      buf[i] = signal[f * w.hop + i] * window[i];
    }
    fft(buf);
    std::copy_n(buf.begin(), out.bins, out.data.begin() + f * out.bins);
  }
  return out;
}

RealMatrix magnitude(const ComplexFrames& frames, const WindowSpec& w,
                     double sample_rate_hz) {
  std::size_t keep = frames.bins;
  if (w.band_limit_hz > 0) {
    double res = sample_rate_hz / static_cast<double>(w.fft_size);
    keep = std::min(frames.bins,
                    static_cast<std::size_t>(std::floor(w.band_limit_hz / res)) + 1);
  }
  RealMatrix m{frames.frames, keep, std::vector<double>(frames.frames * keep)};
  for (std::size_t f = 0; f < frames.frames; ++f)
    for (std::size_t b = 0; b < keep; ++b) m(f, b) = std::abs(frames(f, b));
  return m;
}

RealMatrix log_compress(const RealMatrix& mag) {
  RealMatrix out = mag;
  for (auto& v : out.data) {
    if (v < 0) throw ContractError("log_compress expects nonnegative magnitudes");
    v = std::log1p(v);
  }
  return out;
}

RealMatrix resize_bilinear(const RealMatrix& in, std::size_t rows, std::size_t cols) {
  if (in.rows == 0 || in.cols == 0 || rows == 0 || cols == 0) {
    throw ContractError("resize of an empty matrix");
  }
  RealMatrix out{rows, cols, std::vector<double>(rows * cols)};
  auto coord = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
    if (n_out == 1 || n_in == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(n_in - 1) /
           static_cast<double>(n_out - 1);
  };
  for (std::size_t r = 0; r < rows; ++r) {
    double y = coord(r, rows, in.rows);
    auto y0 = static_cast<std::size_t>(std::floor(y));
    std::size_t y1 = std::min(y0 + 1, in.rows - 1);
    double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < cols; ++c) {
      double x = coord(c, cols, in.cols);
      auto x0 = static_cast<std::size_t>(std::floor(x));
      std::size_t x1 = std::min(x0 + 1, in.cols - 1);
      double fx = x - static_cast<double>(x0);
      double top = in(y0, x0) * (1 - fx) + in(y0, x1) * fx;
      double bot = in(y1, x0) * (1 - fx) + in(y1, x1) * fx;
      out(r, c) = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

Spectrogram to_image(const RealMatrix& values, std::size_t rows, std::size_t cols) {
  Spectrogram s;
  s.values = resize_bilinear(values, rows, cols);
  auto [lo, hi] = std::minmax_element(s.values.data.begin(), s.values.data.end());
  double mn = *lo, mx = *hi;
  for (auto& v : s.values.data) v = mx > mn ? (v - mn) / (mx - mn) : 0.0;
  return s;
}

Spectrogram spectrogram(std::span<const double> segment, const WindowSpec& w,
                        double sample_rate_hz, std::size_t rows, std::size_t cols,
                        int label) {
  auto frames = stft(segment, w);
  auto img = to_image(log_compress(magnitude(frames, w, sample_rate_hz)), rows, cols);
  img.freq_resolution_hz = sample_rate_hz / static_cast<double>(w.fft_size);
  img.time_step_s = static_cast<double>(w.hop) / sample_rate_hz;
  img.source_label = label;
  return img;
}

RegimePreset regime_preset(const std::string& name) {
  if (name == "rotor") {
    // 200 ms at 10 kHz, 75% overlap, 2048-point FFT, 0-200 Hz.
    return {name, {WindowKind::kHann, 2000, hop_for_overlap(2000, 0.75), 2048, 200.0},
            10000.0, 2000};
  }
  if (name == "bearing") {
    // 5 ms at 51.2 kHz, 75% overlap, 512-point FFT, 0-10 kHz.
    return {name,
            {WindowKind::kBlackmanHarris, 256, hop_for_overlap(256, 0.75), 512, 10000.0},
            51200.0, 256};
  }
  if (name == "stator-vib") {
    // 20 ms at 25.6 kHz, 70% overlap, 1024-point FFT, 0-2.5 kHz.
    return {name, {WindowKind::kHann, 512, hop_for_overlap(512, 0.70), 1024, 2500.0},
            25600.0, 512};
  }
  if (name == "stator-cur") {
    // 50 ms at 100 kHz, overlap unstated (75% applied), 8192-point FFT, 0-1 kHz.
    return {name, {WindowKind::kHann, 5000, hop_for_overlap(5000, 0.75), 8192, 1000.0},
            100000.0, 5000};
  }
  throw ConfigError("unknown regime preset '" + name + "'");
}

std::vector<std::string> regime_preset_names() {
  return {"rotor", "bearing", "stator-vib", "stator-cur"};
}

void write_spectrogram(const Spectrogram& s, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little,
                "spectrogram cache assumes a little-endian host");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  nlohmann::json header{{"rows", s.values.rows},
                        {"cols", s.values.cols},
                        {"freq_resolution_hz", s.freq_resolution_hz},
                        {"time_step_s", s.time_step_s},
                        {"label", s.source_label}};
  out << kSpectrogramMagic << '\n' << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(s.values.data.data()),
            static_cast<std::streamsize>(s.values.data.size() * sizeof(double)));
}

Spectrogram read_spectrogram(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kSpectrogramMagic) throw DataError(path.string() + ": bad magic");
  std::getline(in, header_line);
  Spectrogram s;
  try {
    auto header = nlohmann::json::parse(header_line);
    s.values.rows = header.at("rows").get<std::size_t>();
    s.values.cols = header.at("cols").get<std::size_t>();
    s.freq_resolution_hz = header.at("freq_resolution_hz").get<double>();
    s.time_step_s = header.at("time_step_s").get<double>();
    s.source_label = header.at("label").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }
  s.values.data.resize(s.values.rows * s.values.cols);
  in.read(reinterpret_cast<char*>(s.values.data.data()),
          static_cast<std::streamsize>(s.values.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(s.values.data.size() * sizeof(double))) {
    throw DataError(path.string() + ": truncated payload");
  }
  return s;
}

MMHCAN_NAMESPACE_END
