#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmhcan/config.hpp"

MMHCAN_NAMESPACE_BEGIN

struct CommandOptions {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;
  std::filesystem::path out = "runs";
  std::optional<std::uint64_t> seed;
};

std::vector<std::string> command_names();

// Dispatches one command; library exceptions propagate to the caller.
void run_command(const CommandOptions& opts, std::ostream& log);

// Building blocks used by the commands.
DatasetSplit load_dataset(const Settings& s);
PreparedSet prepare_split(const Settings& s, const std::vector<SignalSegment>& segments);

// Fixed ablation matrix: {w_t}, {w_s}, {w_cr}, {w_t,w_s}, {w_t,w_s,w_cl},
// {w_t,w_s,w_cr}, {w_t,w_s,w_cr,w_cl}, all five.
std::vector<BlockSwitches> ablation_rows();

struct AblationRow {
  BlockSwitches switches;
  std::string config_hash;
  MetricsReport metrics;
};
std::vector<AblationRow> run_ablation(const Settings& base, const std::filesystem::path& out,
                                      std::ostream& log,
                                      const std::vector<BlockSwitches>& rows = ablation_rows());
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

struct RobustnessRow {
  std::string kind;  // clean, gaussian, harmonics, spikes
  MetricsReport metrics;
  double delta = 0;  // accuracy - clean accuracy
  std::optional<double> realized_snr_db;
};
// Perturbs every test segment (seeded per segment), re-normalizes, and
// re-evaluates.
std::vector<RobustnessRow> run_robustness(const Settings& s, const Model& model,
                                          const std::vector<SignalSegment>& test);
void write_robustness_csv(const std::vector<RobustnessRow>& rows, const std::filesystem::path& path);

// Markdown summary of every metrics.json below `dir`.
std::string render_report(const std::filesystem::path& dir);

Settings settings_with_switches(const Settings& base, const BlockSwitches& sw);

MMHCAN_NAMESPACE_END
