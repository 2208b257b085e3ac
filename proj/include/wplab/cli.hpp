#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "wplab/grid.hpp"
#include "wplab/metric_space.hpp"
#include "wplab/report.hpp"
#include "wplab/sphere.hpp"

namespace wplab {

enum ExitCode : int { kExitPass = 0, kExitClaimFailure = 1, kExitConfigError = 2, kExitNumericalQuality = 3 };

struct Tolerances {
  double scal = 1e-9;             // Scal >= -scal
  double volume = 1e-6;           // absolute slack on the volume bounds
  double warp_floor = 1e-12;      // h >= 2 A_1 - warp_floor
  double total_curvature = 1e-6;  // relative
  double laplacian = 1e-9;        // Delta f - f <= laplacian
  double probe_relative = 0.2;    // |probe - Scal| <= probe_relative |Scal|
  double convergence_ratio = 0.1; // last / first level
};

struct ProbeSettings {
  std::size_t level = 2;
  std::vector<SpherePoint> centers;  // empty: pick the point farthest from the poles
  std::vector<double> radii{0.35, 0.45, 0.55, 0.65, 0.75};
  ProductGridOptions grid{64, 64, 32, 8};
  double pole_guard = kPi / 2.0;  // centers closer to a pole are skipped
};

struct FieldSettings {
  std::string kind = "warp";  // warp | laplacian | scalar
  std::size_t level = 1;
};

/// Everything a command needs. Either `poles` or `constant_warp` is set.
struct RunConfig {
  std::optional<PoleConfiguration> poles;
  std::optional<double> constant_warp;
  std::vector<std::size_t> levels{1, 2, 4, 8, 16};
  GridOptions grid{.resolution = 32, .depth_limit = 12, .panel_order = 8, .exclusion_radius = 1e-24};
  ProductGridOptions product{16, 32, 16, 2};
  std::vector<double> q_list{1.0};
  std::vector<double> p_list{1.0};
  Tolerances tolerances;
  std::size_t distance_pairs = 200;
  std::size_t diameter_sources = 16;
  ProbeSettings probe;
  FieldSettings field;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the offending key.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Structural checks: tolerances > 0, levels nonempty and ascending.
  void validate() const;
  /// Hash of the canonical JSON form.
  std::string hash() const;
  std::string label() const;
};

/// Reads and parses a config file; parse errors carry line and column.
RunConfig load_run_config(const std::filesystem::path& path);
/// Built-in defaults for the example families: "case1", "case2", "case3",
/// "constant".
RunConfig preset_run_config(const std::string& name);

/// Parses "1,2,4" into levels; throws ConfigError on junk.
std::vector<std::size_t> parse_levels(const std::string& text);

/// Report plus the exit code it maps to.
struct CommandResult {
  VerificationReport report;
  int exit_code = kExitPass;
};

/// 1 if a plain claim fails, else 3 if a "quality_" claim fails, else 0.
int exit_code_for(const VerificationReport& report);

/// Each command writes <name>.json and <name>.csv into `out` (created if
/// missing) and logs progress lines to `log`.
CommandResult cmd_validate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
CommandResult cmd_verify(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// Writes field_values.csv with columns r,theta,value; throws ConfigError on an
/// unknown kind.
CommandResult cmd_field(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
CommandResult cmd_converge(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
CommandResult cmd_probe(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// Merges the reports found in `out` into report.json / report.csv.
CommandResult cmd_report(const std::filesystem::path& out, std::ostream& log);

}  // namespace wplab
