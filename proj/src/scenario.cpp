#include "bzmarble/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include "bzmarble/error.hpp"

namespace bzmarble {

namespace {

std::string snapshot_name(long step, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%09ld.%s", step, ext);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_firing_log(const std::vector<FiringEvent>& log, std::ostream& out) {
  out << "step,event,x,y,period,lifetime\n";
  for (const auto& e : log) {
    out << e.step << ',' << to_string(e.kind) << ',' << e.x << ',' << e.y << ',' << e.period << ',' << e.lifetime
        << '\n';
  }
}

RunArtifacts run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  config.params.validate();
  const auto mask = std::make_shared<const DomainMask>(DomainMask::disc(config.radius));
  const StimulusSchedule schedule = config.schedule();
  const ElectrodeProbe e1(config.electrode1, ElectrodeRole::reference, *mask);
  const ElectrodeProbe e2(config.electrode2, ElectrodeRole::recording, *mask);

  std::vector<ExcitationSource> scripted;
  for (const auto& [label, src] : config.sources) scripted.push_back(src);
  std::optional<SourceManager> manager;
  if (config.manager) manager.emplace(*mask, *config.manager, config.seed);

  RunArtifacts art;
  art.trace = PotentialTrace(config.record_every, config.params.dt);
  art.rest_u = find_homogeneous_fixed_point(config.params);

  const std::filesystem::path dir(config.output_dir);
  if (options.write_files) {
    std::filesystem::create_directories(dir);
    if (config.snapshot_every > 0) std::filesystem::create_directories(dir / "snapshots");
    art.config_echo_path = dir / "effective.cfg";
    open_out(art.config_echo_path) << echo_config(config);
  }

  auto snapshot = [&](const MarbleState& s) {
    if (!options.write_files || config.snapshot_every <= 0 || s.step_index % config.snapshot_every != 0) return;
    const auto pgm = dir / "snapshots" / snapshot_name(s.step_index, "pgm");
    auto out = open_out(pgm, true);
    write_pgm(s.u, out);
    art.snapshot_paths.push_back(pgm);
    if (config.snapshot_csv) {
      const auto csv = dir / "snapshots" / snapshot_name(s.step_index, "csv");
      auto cout = open_out(csv);
      write_csv_grid(s.u, cout);
      art.snapshot_paths.push_back(csv);
    }
  };

  std::unique_ptr<RowBandPool> pool;
  if (options.threads > 1) pool = std::make_unique<RowBandPool>(options.threads);
  EulerStepper stepper(config.params, pool.get());
  MarbleState state = MarbleState::homogeneous(mask, art.rest_u, art.rest_u);

  art.trace.record(state, e1, e2, schedule);
  snapshot(state);
  for (long s = 0; s < config.total_steps; ++s) {
    const double phi = schedule.phi_at(s);
    if (advance_scripted(scripted, state, s, &art.firing_log) > 0) {
      art.warnings.push_back("step " + std::to_string(s) + ": a scripted source covers no active cell");
    }
    if (manager) manager->advance(state, s, &art.firing_log);
    stepper.step(state, phi);
    art.trace.record(state, e1, e2, schedule);
    snapshot(state);
  }

  if (options.write_files) {
    art.trace_path = dir / "trace.csv";
    auto tout = open_out(art.trace_path);
    art.trace.write_csv(tout);
    art.firing_log_path = dir / "firing_log.csv";
    auto fout = open_out(art.firing_log_path);
    write_firing_log(art.firing_log, fout);
  }
  return art;
}

PropagationOutcome test_propagation(const ScenarioConfig& config, double phi, RowBandPool* pool) {
  SimParams p = config.params;
  p.phi = phi;
  p.validate();
  const auto mask = std::make_shared<const DomainMask>(DomainMask::disc(config.radius));
  if (config.scan.distance > config.radius) {
    throw InvalidParameter("propagation distance exceeds the disc radius");
  }
  PropagationOutcome out;
  out.rest_u = find_homogeneous_fixed_point(p);
  const double threshold = out.rest_u + config.scan.rise;

  // Far cells as padded indices, row-major.
  std::vector<std::size_t> far;
  const long d2 = static_cast<long>(config.scan.distance) * config.scan.distance;
  for (int y = 0; y < mask->height(); ++y) {
    const auto span = mask->row_span(y);
    for (int x = span.begin; x < span.end; ++x) {
      const long dx = x - mask->center_x();
      const long dy = y - mask->center_y();
      if (dx * dx + dy * dy >= d2) far.push_back(mask->padded_index(x, y));
    }
  }

  MarbleState state = MarbleState::homogeneous(mask, out.rest_u, out.rest_u);
  ExcitationSource stim;
  stim.x = mask->center_x();
  stim.y = mask->center_y();
  stim.radius = config.scan.stimulus_radius;
  stim.amplitude = config.scan.stimulus_amplitude;
  excite(state, stim);

  EulerStepper stepper(p, pool);
  constexpr long kQuietSteps = 1000;
  long quiet = 0;
  for (long s = 1; s <= config.scan.step_budget; ++s) {
    stepper.step(state, phi);
    const double* u = state.u.data();
    for (std::size_t i : far) {
      if (u[i] > threshold) {
        out.propagated = true;
        out.steps = s;
        return out;
      }
    }
    bool any_excited = false;
    for (int y = 0; y < mask->height() && !any_excited; ++y) {
      const auto span = mask->row_span(y);
      const double* row = state.u.row(y);
      for (int x = span.begin; x < span.end; ++x) {
        if (row[x] > threshold) {
          any_excited = true;
          break;
        }
      }
    }
    quiet = any_excited ? 0 : quiet + 1;
    if (quiet >= kQuietSteps) {
      out.steps = s;
      return out;
    }
  }
  out.steps = config.scan.step_budget;
  return out;
}

PhiScanResult scan_phi(const ScenarioConfig& config, double phi_lo, double phi_hi, double tol, unsigned threads) {
  if (!(phi_lo < phi_hi)) throw InvalidBracket("scan_phi needs phi_lo < phi_hi");
  if (!(tol > 0.0)) throw InvalidParameter("scan_phi tolerance must be positive");
  std::unique_ptr<RowBandPool> pool;
  if (threads > 1) pool = std::make_unique<RowBandPool>(threads);

  PhiScanResult result;
  auto trial = [&](double phi) {
    const bool ok = test_propagation(config, phi, pool.get()).propagated;
    result.trials.emplace_back(phi, ok);
    return ok;
  };
  if (!trial(phi_lo)) throw InvalidBracket("no propagation at the lower bracket end");
  if (trial(phi_hi)) throw InvalidBracket("propagation at the upper bracket end");

  double lo = phi_lo;
  double hi = phi_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (trial(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++result.iterations;
  }
  result.phi_c = 0.5 * (lo + hi);
  return result;
}

}  // namespace bzmarble
