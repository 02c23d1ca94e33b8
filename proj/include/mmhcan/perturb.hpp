#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mmhcan/precision.hpp"

MMHCAN_NAMESPACE_BEGIN

namespace perturbation {
// Additive white noise; infinite SNR is a no-op.
struct Gaussian {
  double snr_db = 10;
};
// Phase-locked sinusoids at k * f0, each rel_amp times the fitted fundamental.
struct Harmonics {
  std::vector<int> orders{3, 5, 7};
  double rel_amp = 0.2;
  double base_freq_hz = 60;
  double sample_rate_hz = 1000;
};
// round(rate * n) impulses of +/- rel_amp * max|x| at distinct positions.
struct Spikes {
  double rel_amp = 0.2;
  double rate = 0.01;
};
}  // namespace perturbation

using Perturbation =
    std::variant<perturbation::Gaussian, perturbation::Harmonics, perturbation::Spikes>;

// "gaussian", "harmonics", "spikes"; ConfigError otherwise.
std::string kind_name(const Perturbation& p);
Perturbation make_perturbation(const std::string& kind);

std::vector<double> perturb(std::span<const double> x, const Perturbation& p,
                            std::uint64_t seed);

// Least-squares amplitude and phase of a cos(2 pi f t - phase) component.
struct ToneFit {
  double amplitude = 0;
  double phase = 0;
};
ToneFit fit_tone(std::span<const double> x, double freq_hz, double sample_rate_hz);

double signal_power(std::span<const double> x);
double snr_db(std::span<const double> clean, std::span<const double> noisy);

MMHCAN_NAMESPACE_END
