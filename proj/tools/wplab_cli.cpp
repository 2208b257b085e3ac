// wplab: verification, field export, convergence and probe runs for warped
// products S^2 x_h S^1.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "wplab/cli.hpp"

namespace {

wplab::RunConfig resolve_config(const std::string& arg) {
  if (arg.empty()) throw wplab::ConfigError("--config is required");
  if (std::filesystem::exists(arg)) return wplab::load_run_config(arg);
  if (arg == "case1" || arg == "case2" || arg == "case3" || arg == "constant") {
    return wplab::preset_run_config(arg);
  }
  throw wplab::ConfigError("config file not found: " + arg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Warped-product verification lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "wplab_out";
  std::optional<int> resolution;
  std::optional<std::string> levels;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> kind;
  std::optional<std::size_t> level;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "config JSON path or preset (case1, case2, case3, constant)");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--resolution", resolution, "grid resolution override");
    sub->add_option("--levels", levels, "comma-separated levels, e.g. 1,2,4");
    sub->add_option("--seed", seed, "random seed");
  };
  auto* validate = app.add_subcommand("validate", "check a configuration and print derived constants");
  auto* verify = app.add_subcommand("verify", "run the verification suite on every level");
  auto* field = app.add_subcommand("field", "export warp, laplacian or scalar values on the sphere grid");
  auto* converge = app.add_subcommand("converge", "distance tables to the limit warp");
  auto* probe = app.add_subcommand("probe", "ball-volume scalar curvature probe");
  auto* report = app.add_subcommand("report", "merge the reports in --out");
  for (auto* sub : {validate, verify, field, converge, probe}) add_common(sub, true);
  report->add_option("--out", out_dir, "output directory");
  field->add_option("--kind", kind, "warp | laplacian | scalar");
  field->add_option("--level", level, "level j");
  probe->add_option("--level", level, "level j");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : wplab::kExitConfigError;
  }

  try {
    wplab::CommandResult res;
    if (report->parsed()) {
      res = wplab::cmd_report(out_dir, std::cout);
    } else {
      wplab::RunConfig config = resolve_config(config_path);
      if (levels) config.levels = wplab::parse_levels(*levels);
      if (seed) config.seed = *seed;
      if (resolution) {
        if (probe->parsed()) {
          config.probe.grid.n_r = *resolution;
        } else {
          config.grid.resolution = *resolution;
        }
      }
      if (kind) config.field.kind = *kind;
      if (level && field->parsed()) config.field.level = *level;
      if (level && probe->parsed()) config.probe.level = *level;
      config.validate();
      if (validate->parsed()) res = wplab::cmd_validate(config, out_dir, std::cout);
      if (verify->parsed()) res = wplab::cmd_verify(config, out_dir, std::cout);
      if (field->parsed()) res = wplab::cmd_field(config, out_dir, std::cout);
      if (converge->parsed()) res = wplab::cmd_converge(config, out_dir, std::cout);
      if (probe->parsed()) res = wplab::cmd_probe(config, out_dir, std::cout);
    }
    std::cout << (res.exit_code == wplab::kExitPass ? "PASS" : "FAIL") << " (exit " << res.exit_code << ")\n";
    return res.exit_code;
  } catch (const wplab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return wplab::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return wplab::kExitNumericalQuality;
  }
}
