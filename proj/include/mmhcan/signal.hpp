#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mmhcan/precision.hpp"

MMHCAN_NAMESPACE_BEGIN

enum class Channel { kCurrent, kVibration };

std::string to_string(Channel c);
Channel parse_channel(const std::string& name);

struct RawSignal {
  std::vector<double> samples;
  double sample_rate_hz = 0;
  int label = 0;
  Channel channel = Channel::kCurrent;
};

struct SignalSegment {
  std::vector<double> values;  // z-scored
  double mu = 0;
  double sigma = 0;            // 0 marks a degenerate (constant) segment
  bool degenerate = false;
  int label = 0;
  Channel channel = Channel::kCurrent;
};

// Fault signatures layered on top of a fundamental sinusoid.
namespace signature {
struct Healthy {};
struct Sidebands {
  double offset_hz = 10;
  double rel_amp = 0.3;
};
// Exponentially decaying resonant bursts repeated at rate_hz.
struct ImpulseTrain {
  double rate_hz = 20;
  double decay_s = 0.004;
  double rel_amp = 0.8;
  double resonance_hz = 250;
};
struct HarmonicImbalance {
  std::vector<int> orders;
  std::vector<double> rel_amps;
};
}  // namespace signature

using Signature = std::variant<signature::Healthy, signature::Sidebands,
                               signature::ImpulseTrain,
                               signature::HarmonicImbalance>;

struct SynthClassSpec {
  double base_freq_hz = 60;
  Signature signature = signature::Healthy{};
  double noise_floor = 0;  // white Gaussian std relative to unit fundamental
  // Peak relative amplitude of 3rd/5th/7th supply harmonics; each amplitude
  // drifts slowly between 0 and this value over the record.
  double supply_harmonics = 0;
  // The noise std drifts slowly within noise_floor * (1 +/- noise_drift).
  double noise_drift = 0;
  Channel channel = Channel::kCurrent;
};

// ContractError unless every rel_amp is in (0,1], offset < base frequency,
// supply_harmonics is in [0,1] and noise_drift in [0,1).
void validate(const SynthClassSpec& spec);

// Splits into floor(len/T) non-overlapping windows, drops the tail, z-scores
// each window.
std::vector<SignalSegment> segment(const RawSignal& signal, std::size_t length);

// z-scores one window; constant input yields zeros with sigma = 0.
SignalSegment normalize(std::span<const double> values, int label = 0,
                        Channel channel = Channel::kCurrent);

RawSignal synthesize(const SynthClassSpec& spec, double duration_s,
                     double sample_rate_hz, std::uint64_t seed, int label = 0);

struct CsvSchema {
  std::size_t value_column = 0;
  bool skip_header = false;
  int label = 0;
  double sample_rate_hz = 1;
  Channel channel = Channel::kCurrent;
};

RawSignal ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);
// Writes one value per line at round-trip precision.
void export_csv(const RawSignal& signal, const std::filesystem::path& path);

struct DatasetSplit {
  std::vector<SignalSegment> train;
  std::vector<SignalSegment> test;
};

// One synthesized source per class, `per_class` segments each, split per
// class after a seeded shuffle.
DatasetSplit make_dataset(const std::vector<SynthClassSpec>& specs,
                          std::size_t per_class, double split,
                          std::size_t segment_length, double sample_rate_hz,
                          std::uint64_t seed);

// Balances classes to the smallest per-class count, then splits as above.
DatasetSplit split_segments(std::vector<SignalSegment> segments, double split,
                            std::uint64_t seed);

// Dataset manifest: {"version": 1, "entries": [{"path", "label", "channel",
// "sample_rate_hz", "value_column", "skip_header"}]}. Relative paths resolve
// against the manifest's directory.
struct ManifestEntry {
  std::filesystem::path path;
  CsvSchema schema;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path);

// Default four-class benchmark: healthy, rotor-like sidebands, bearing-like
// impulse train, stator-like even-harmonic imbalance.
std::vector<SynthClassSpec> default_benchmark_classes(double noise_floor,
                                                     double supply_harmonics = 0,
                                                     double noise_drift = 0);

MMHCAN_NAMESPACE_END
