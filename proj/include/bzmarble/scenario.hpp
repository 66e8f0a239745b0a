#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bzmarble/kinetics.hpp"
#include "bzmarble/probes.hpp"
#include "bzmarble/stimulation.hpp"

namespace bzmarble {

/// Settings of the wave-propagation test used by scan_phi.
struct PropagationTest {
  long step_budget = 20000;
  /// Minimum lattice distance from the disc centre a cell must have to count.
  int distance = 50;
  /// A far cell must exceed u* + rise.
  double rise = 0.3;
  int stimulus_radius = 3;
  double stimulus_amplitude = 1.0;

  friend bool operator==(const PropagationTest&, const PropagationTest&) = default;
};

/// Everything needed to reproduce one simulated experiment.
///
/// Text form: flat `key = value` lines, `#` comments. See parse_config.
struct ScenarioConfig {
  SimParams params;
  int radius = 185;
  CellRect electrode1;  // reference, E1
  CellRect electrode2;  // recording, E2
  std::vector<StimulusSegment> segments;
  std::vector<std::pair<std::string, ExcitationSource>> sources;
  std::optional<SourceManagerSettings> manager;
  long total_steps = 1;
  long record_every = 10;
  long snapshot_every = 500;
  bool snapshot_csv = false;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  PropagationTest scan;

  StimulusSchedule schedule() const { return StimulusSchedule(params.phi, segments); }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Default electrode pair for a disc of radius r: two 6x20 rectangles 20
/// rows below the top of the disc, 14 cells apart, E1 west of E2.
std::pair<CellRect, CellRect> default_electrodes(int radius);

/// Parses config text. Required keys: domain.radius, run.total_steps,
/// run.seed. Unknown or duplicated keys, malformed or out-of-range values and
/// overlapping schedule segments raise ConfigError with the line number.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical text with every key spelled out; parse_config(echo_config(c)) == c.
std::string echo_config(const ScenarioConfig& config);

struct RunOptions {
  unsigned threads = 1;
  /// Write trace, firing log, config echo and snapshots under output_dir.
  bool write_files = true;
};

struct RunArtifacts {
  std::filesystem::path trace_path;
  std::filesystem::path firing_log_path;
  std::filesystem::path config_echo_path;
  std::vector<std::filesystem::path> snapshot_paths;

  PotentialTrace trace{1, 1.0};
  std::vector<FiringEvent> firing_log;
  std::vector<std::string> warnings;
  double rest_u = 0.0;
};

/// Per step: phi lookup, source advance/fire, Euler step, record/snapshot.
/// BlowUpError propagates with the offending step.
RunArtifacts run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

void write_firing_log(const std::vector<FiringEvent>& log, std::ostream& out);

struct PropagationOutcome {
  bool propagated = false;
  /// Step at which a far cell first crossed the threshold, or the step the
  /// run stopped at.
  long steps = 0;
  double rest_u = 0.0;
};

/// Centre stimulus from the homogeneous rest state at the given phi.
/// Failure is declared early once no cell has exceeded u* + rise for 1000
/// consecutive steps.
PropagationOutcome test_propagation(const ScenarioConfig& config, double phi, RowBandPool* pool = nullptr);

struct PhiScanResult {
  double phi_c = 0.0;
  /// Every evaluated phi with its outcome, endpoints first.
  std::vector<std::pair<double, bool>> trials;
  int iterations = 0;
};

/// Bisection for the propagation-failure threshold. Throws InvalidBracket
/// unless lo < hi, lo propagates and hi fails.
PhiScanResult scan_phi(const ScenarioConfig& config, double phi_lo, double phi_hi, double tol,
                       unsigned threads = 1);

}  // namespace bzmarble
