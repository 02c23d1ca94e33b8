#include "mmhcan/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "mmhcan/errors.hpp"

MMHCAN_NAMESPACE_BEGIN

namespace {

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

}  // namespace

std::string kind_name(const Perturbation& p) {
  return std::visit(Overload{[](const perturbation::Gaussian&) { return std::string("gaussian"); },
                             [](const perturbation::Harmonics&) { return std::string("harmonics"); },
                             [](const perturbation::Spikes&) { return std::string("spikes"); }},
                    p);
}

Perturbation make_perturbation(const std::string& kind) {
  if (kind == "gaussian") return perturbation::Gaussian{};
  if (kind == "harmonics") return perturbation::Harmonics{};
  if (kind == "spikes") return perturbation::Spikes{};
  throw ConfigError("unknown perturbation kind '" + kind + "'");
}

double signal_power(std::span<const double> x) {
  if (x.empty()) return 0;
  double acc = 0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double snr_db(std::span<const double> clean, std::span<const double> noisy) {
  if (clean.size() != noisy.size()) throw DimensionError("snr_db: size mismatch");
  std::vector<double> diff(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) diff[i] = noisy[i] - clean[i];
  return 10 * std::log10(signal_power(clean) / signal_power(diff));
}

ToneFit fit_tone(std::span<const double> x, double freq_hz, double sample_rate_hz) {
  if (!(sample_rate_hz > 0) || !(freq_hz > 0)) throw ContractError("fit_tone: bad frequency");
  double scc = 0, sss = 0, scs = 0, xc = 0, xs = 0;
  const double w = 2 * std::numbers::pi * freq_hz / sample_rate_hz;
  for (std::size_t n = 0; n < x.size(); ++n) {
    double c = std::cos(w * static_cast<double>(n)), s = std::sin(w * static_cast<double>(n));
    scc += c * c;
    sss += s * s;
    scs += c * s;
    xc += x[n] * c;
    xs += x[n] * s;
  }
  double det = scc * sss - scs * scs;
  if (std::abs(det) < 1e-12) throw ContractError("fit_tone: segment too short for the tone");
  double a = (xc * sss - xs * scs) / det;
  double b = (xs * scc - xc * scs) / det;
  return {std::hypot(a, b), std::atan2(b, a)};
}

std::vector<double> perturb(std::span<const double> x, const Perturbation& p,
                            std::uint64_t seed) {
  std::vector<double> out(x.begin(), x.end());
  std::mt19937_64 rng(seed);
  std::visit(
      Overload{
          [&](const perturbation::Gaussian& g) {
            if (std::isinf(g.snr_db) && g.snr_db > 0) return;
            if (std::isnan(g.snr_db)) throw ConfigError("gaussian snr_db is NaN");
            std::normal_distribution<double> dist(0.0, 1.0);
            std::vector<double> noise(x.size());
            for (auto& v : noise) v = dist(rng);
            double pn = signal_power(noise);
            if (pn == 0) return;
            double target = signal_power(x) / std::pow(10.0, g.snr_db / 10);
            double s = std::sqrt(target / pn);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * noise[i];
          },
          [&](const perturbation::Harmonics& h) {
            if (!(h.rel_amp >= 0)) throw ConfigError("harmonics rel_amp must be >= 0");
            ToneFit fit = fit_tone(x, h.base_freq_hz, h.sample_rate_hz);
            const double w = 2 * std::numbers::pi * h.base_freq_hz / h.sample_rate_hz;
            for (int k : h.orders) {
              if (k < 2) throw ConfigError("harmonic orders must be >= 2");
              double amp = h.rel_amp * fit.amplitude;
              for (std::size_t n = 0; n < out.size(); ++n) {
                out[n] += amp * std::cos(k * (w * static_cast<double>(n) - fit.phase));
              }
            }
          },
          [&](const perturbation::Spikes& s) {
            if (!(s.rel_amp >= 0) || !(s.rate >= 0) || s.rate > 1) {
              throw ConfigError("spikes need rel_amp >= 0 and rate in [0, 1]");
            }
            double peak = 0;
            for (double v : x) peak = std::max(peak, std::abs(v));
            auto count = static_cast<std::size_t>(std::llround(s.rate * static_cast<double>(x.size())));
            std::vector<std::size_t> idx(x.size());
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t i = 0; i < count; ++i) {
              std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
              std::swap(idx[i], idx[pick(rng)]);
              double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
              out[idx[i]] += sign * s.rel_amp * peak;
            }
          }},
      p);
  return out;
}

MMHCAN_NAMESPACE_END
