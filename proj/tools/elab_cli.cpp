// elab: clickstream -> features -> model -> explanations -> comparison -> report.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "elab/course_io.hpp"
#include "elab/error.hpp"
#include "elab/pipeline.hpp"
#include "elab/presets.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON pipeline config");
  cmd->add_option("--out", opts.out, "output directory (overrides the config)");
  cmd->add_option("--seed", opts.seed, "global seed (overrides the config)");
  cmd->add_option("--preset", opts.preset, "named course preset (replaces the configured courses)");
  cmd->add_option("--workers", opts.workers, "explainer threads, 0 = one per core");
}

elab::PipelineConfig resolve(const CommonOptions& opts) {
  elab::PipelineConfig config;
  if (!opts.config_path.empty()) {
    const fs::path path(opts.config_path);
    config = elab::config_from_json(elab::load_json(path), path.parent_path());
  }
  if (!opts.preset.empty()) elab::apply_preset(config, opts.preset);
  if (!opts.out.empty()) config.out = opts.out;
  if (opts.seed) config.seed = *opts.seed;
  if (opts.workers) config.workers = *opts.workers;
  config.validate();
  return config;
}

int exit_code(const elab::Error& e) {
  if (dynamic_cast<const elab::MissingInputError*>(&e)) return 2;
  if (dynamic_cast<const elab::NumericError*>(&e)) return 4;
  if (dynamic_cast<const elab::ParseError*>(&e) || dynamic_cast<const elab::ValidationError*>(&e) ||
      dynamic_cast<const elab::ShapeError*>(&e))
    return 3;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainer comparison toolkit for student-success models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(elab::kToolVersion));

  CommonOptions opts;
  struct Command {
    const char* name;
    const char* help;
    std::optional<elab::Stage> stage;
  };
  const Command commands[] = {
      {"generate", "write synthetic or imported course data", elab::Stage::Generate},
      {"extract", "compute weekly behavior features", elab::Stage::Extract},
      {"train", "split, normalize and train one model per course", elab::Stage::Train},
      {"explain", "explain representative students with each method", elab::Stage::Explain},
      {"compare", "aggregate rankings and build comparison matrices", elab::Stage::Compare},
      {"report", "render heatmaps, matrices and a summary", elab::Stage::Report},
      {"pipeline", "run every stage", std::nullopt},
  };
  std::optional<elab::Stage> selected;
  bool run_all = false;
  for (const auto& c : commands) {
    auto* cmd = app.add_subcommand(c.name, c.help);
    add_common(cmd, opts);
    cmd->callback([&, c] {
      if (c.stage)
        selected = c.stage;
      else
        run_all = true;
    });
  }
  auto* presets = app.add_subcommand("presets", "list the built-in course presets");
  presets->callback([] {
    for (const auto& name : elab::preset_names()) {
      const auto p = elab::make_preset(name);
      std::cout << fmt::format("{:<16} {}\n", p.name, p.description);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (!selected && !run_all) return 0;

  try {
    const auto config = resolve(opts);
    if (run_all)
      elab::run_pipeline(config);
    else
      elab::run_stage(config, *selected);
  } catch (const elab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
