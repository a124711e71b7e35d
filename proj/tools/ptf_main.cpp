#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ptf/config.hpp"
#include "ptf/errors.hpp"
#include "ptf/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Prescribed-tension harmonic map flows and estimate checks"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  for (const char* name : {"flow", "verify", "spectrum", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "override [run] seed");
    sub->add_option("--resolution", resolution, "nodes per unit length; replaces [run] resolution and resolutions");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ptf::exit_config_error;
  }

  const auto command = ptf::command_from_string(app.get_subcommands().front()->get_name());
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "config error: cannot read '" << config_path << "'\n";
    return ptf::exit_config_error;
  }
  std::ostringstream text;
  text << in.rdbuf();

  ptf::RunConfig config;
  try {
    config = ptf::parse_config(text.str(), command);
  } catch (const ptf::ConfigError& e) {
    std::cerr << "config error: " << config_path << ": " << e.what() << '\n';
    return ptf::exit_config_error;
  }
  config.output = out_dir;
  if (seed) config.seed = *seed;
  if (resolution) {
    config.resolution = *resolution;
    config.resolutions.clear();
  }
  return ptf::run_command(config, std::cerr);
}
