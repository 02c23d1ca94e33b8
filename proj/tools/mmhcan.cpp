#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "mmhcan/commands.hpp"

int main(int argc, char** argv) {
  mmhcan::CommandOptions opts;
  CLI::App app{"Multimodal hypergraph fault classifier"};
  app.require_subcommand(1, 1);
  std::string config, out = "runs";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  const std::map<std::string, std::string> about{
      {"gen-data", "Synthesize the four-class dataset as CSV files plus a manifest"},
      {"train", "Train one model and write history, checkpoint and metrics"},
      {"eval", "Evaluate the trained checkpoint on the test split"},
      {"ablate", "Train and evaluate every row of the block ablation matrix"},
      {"perturb-eval", "Evaluate the trained checkpoint under noise, harmonics and spikes"},
      {"report", "Render a markdown report of every run below --out"},
  };
  for (const auto& name : mmhcan::command_names()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "Override a config key: dotted.key=value")->take_all()->expected(1);
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Seed (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  auto* sub = app.get_subcommands().front();
  opts.command = sub->get_name();
  if (!config.empty()) opts.config = config;
  opts.overrides = sets;
  opts.out = out;
  if (sub->count("--seed")) opts.seed = seed;

  try {
    mmhcan::run_command(opts, std::cout);
  } catch (const mmhcan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const mmhcan::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
