// Command-line scenario runner: builds the simulated link, replays the
// experiment protocols, and writes CSV reports plus binary artifacts.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "protac/config.hpp"
#include "protac/error.hpp"
#include "protac/fsio.hpp"
#include "protac/scenario.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quick = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario config file (defaults when omitted)");
  cmd->add_option("--out", args.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", args.seed, "Override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--quick", args.quick, "Shrink grids for a fast smoke run");
}

protac::ScenarioConfig resolve_config(const CommonArgs& args, protac::ScenarioKind kind) {
  protac::ScenarioConfig cfg;
  if (!args.config_path.empty())
    cfg = protac::load_config(protac::read_file(args.config_path));
  cfg.scenario = kind;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.quick) cfg.apply_quick_profile();
  return cfg;
}

void write_outputs(const std::string& out_dir, const protac::ScenarioOutput& files) {
  for (const auto& [name, content] : files) {
    const auto path = std::filesystem::path(out_dir) / name;
    protac::write_file(path, content);
    std::printf("wrote %s (%zu bytes)\n", path.string().c_str(), content.size());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-mode (tactile + proximity) soft skin link simulator"};
  app.require_subcommand(1);

  CommonArgs mesh_args, dataset_args, train_args, indent_args, distance_args, cycle_args;
  auto* cmd_mesh = app.add_subcommand("mesh", "Build the skin mesh and export it as plain text");
  add_common(cmd_mesh, mesh_args);
  auto* cmd_dataset = app.add_subcommand("dataset", "Generate the indentation ground-truth dataset");
  add_common(cmd_dataset, dataset_args);
  auto* cmd_train = app.add_subcommand("train", "Train the ridge displacement regressor");
  add_common(cmd_train, train_args);
  auto* cmd_indent = app.add_subcommand("indent", "Run the indentation sweep");
  add_common(cmd_indent, indent_args);
  auto* cmd_distance = app.add_subcommand("distance", "Run the obstacle distance sweep");
  add_common(cmd_distance, distance_args);
  auto* cmd_cycle = app.add_subcommand("cycle", "Run the scripted mode-switching timeline");
  add_common(cmd_cycle, cycle_args);

  CLI11_PARSE(app, argc, argv);

  try {
    using protac::ScenarioKind;
    if (cmd_mesh->parsed()) {
      const auto cfg = resolve_config(mesh_args, ScenarioKind::kIndentationSweep);
      write_outputs(mesh_args.out_dir, protac::run_mesh_export(cfg));
    } else if (cmd_dataset->parsed()) {
      const auto cfg = resolve_config(dataset_args, ScenarioKind::kDatasetGen);
      write_outputs(dataset_args.out_dir, protac::run_dataset_gen(cfg));
    } else if (cmd_train->parsed()) {
      const auto cfg = resolve_config(train_args, ScenarioKind::kIndentationSweep);
      write_outputs(train_args.out_dir, protac::run_train(cfg));
    } else if (cmd_indent->parsed()) {
      const auto cfg = resolve_config(indent_args, ScenarioKind::kIndentationSweep);
      write_outputs(indent_args.out_dir, protac::run_indentation_sweep(cfg));
    } else if (cmd_distance->parsed()) {
      const auto cfg = resolve_config(distance_args, ScenarioKind::kDistanceSweep);
      write_outputs(distance_args.out_dir, protac::run_distance_sweep(cfg));
    } else if (cmd_cycle->parsed()) {
      const auto cfg = resolve_config(cycle_args, ScenarioKind::kModeCycle);
      write_outputs(cycle_args.out_dir, protac::run_mode_cycle(cfg));
    }
  } catch (const protac::validation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const protac::numerical_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
