#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "mmhcan/perturb.hpp"
#include "mmhcan/train.hpp"

MMHCAN_NAMESPACE_BEGIN

struct DataSettings {
  std::string source = "synthetic";  // or "manifest"
  std::filesystem::path manifest;
  std::size_t per_class = 400;
  double split = 0.8;
  std::size_t segment_length = 256;
  double sample_rate_hz = 1000;
  double noise_floor = 0.2;
  double supply_harmonics = 0.1;
  double noise_drift = 0.5;
  double base_freq_hz = 60;
};

struct Settings {
  std::uint64_t seed = 0;
  DataSettings data;
  WindowSpec window;
  std::string preset;
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
  perturbation::Gaussian gaussian;
  perturbation::Harmonics harmonics;
  perturbation::Spikes spikes;
  nlohmann::json effective;  // fully resolved document
  std::string hash;          // 16 hex digits, FNV-1a of effective.dump()
};

nlohmann::json default_config();

// Recursively overlays `overlay` on `base`; keys missing from `base` and type
// changes (other than integer <-> float) are ConfigErrors naming the dotted key.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay,
                  const std::string& prefix = "");

// "a.b.c=value": the value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Precedence: overrides > file > defaults; `seed` replaces the top-level seed.
Settings load_settings(const std::optional<std::filesystem::path>& file,
                       std::span<const std::string> overrides,
                       std::optional<std::uint64_t> seed = std::nullopt);
Settings settings_from_json(const nlohmann::json& effective);

std::string config_hash(const nlohmann::json& doc);

MMHCAN_NAMESPACE_END
