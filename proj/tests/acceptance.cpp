// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--out-dir DIR] [--only 1,5,9]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bzmarble/analysis.hpp"
#include "bzmarble/error.hpp"
#include "bzmarble/numfmt.hpp"
#include "bzmarble/scenario.hpp"
#include "oracle.hpp"

using namespace bzmarble;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and frozen regression values.
constexpr long kConservationSteps = 10000;
constexpr double kConservationRelTol = 1e-6;
constexpr double kConservationSeconds = 60.0;
constexpr long kFixedPointSteps = 10000;
constexpr double kFixedPointDrift = 1e-6;
constexpr double kFixedPointResidual = 1e-12;
constexpr long kSubThresholdSteps = 10000;
constexpr double kSubThresholdKick = 0.01;
constexpr double kSubThresholdTol = 1e-6;
constexpr long kPropagationBudget = 20000;
constexpr double kScanLo = 0.05;
constexpr double kScanHi = 0.20;
constexpr double kScanTol = 0.002;
constexpr double kFrozenPhiC = 0.09160156249999998;
constexpr double kPhiCTol = 0.002;
constexpr int kFig3MinWesternSpikes = 3;
constexpr double kFig4MinRatio = 1.2;
constexpr long kFig5Steps = 100000;
constexpr long kFig5MinEpochs = 15;
constexpr double kFig5Hi = 3.0;  // potential units; weakest transits peak near 8
constexpr double kFig5Lo = 1.0;
constexpr int kOracleTraces = 1000;
constexpr double kOracleStatsTol = 1e-12;
constexpr unsigned kParallelThreads = 2;

#ifndef BZM_SCENARIO_DIR
#define BZM_SCENARIO_DIR "scenarios"
#endif

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ScenarioConfig default_config() {
  return parse_config("domain.radius = 185\nrun.total_steps = 1\nrun.seed = 1\n");
}

// Canonical scenario runs are shared between criteria 5-9.
class ScenarioRuns {
 public:
  explicit ScenarioRuns(fs::path out) : out_(std::move(out)) {}

  const RunArtifacts& get(const std::string& name, unsigned threads) {
    const std::string key = name + "/t" + std::to_string(threads);
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;
    ScenarioConfig cfg = config(name);
    cfg.output_dir = (out_ / name / ("t" + std::to_string(threads))).string();
    const auto t0 = std::chrono::steady_clock::now();
    auto art = run_scenario(cfg, RunOptions{threads, true});
    std::cout << "       (" << name << ", " << threads << " thread" << (threads > 1 ? "s" : "") << ": "
              << cfg.total_steps << " steps in " << fmt(seconds_since(t0)) << " s)\n";
    return runs_.emplace(key, std::move(art)).first->second;
  }

  ScenarioConfig config(const std::string& name) const {
    return load_config(fs::path(BZM_SCENARIO_DIR) / (name + ".cfg"));
  }

 private:
  fs::path out_;
  std::map<std::string, RunArtifacts> runs_;
};

const std::vector<std::string> kCanonical = {"fig3", "fig4_3oclock", "fig4_5oclock", "fig5", "photo"};

// ---------------------------------------------------------------------------

Outcome conservation() {
  const auto mask = std::make_shared<const DomainMask>(DomainMask::disc(185));
  auto state = MarbleState::homogeneous(mask, 0.0, 0.0);
  // Off-centre block plus a smooth ramp: strong gradients near the rim.
  for (int y = 0; y < mask->height(); ++y) {
    const auto sp = mask->row_span(y);
    for (int x = sp.begin; x < sp.end; ++x) {
      double u = 0.2 + 0.3 * static_cast<double>(x) / mask->width();
      if (x > 250 && x < 300 && y > 150 && y < 200) u = 1.0;
      state.u.set(x, y, u);
    }
  }
  const double m0 = total_mass(state.u);
  EulerStepper stepper(SimParams{});
  const auto t0 = std::chrono::steady_clock::now();
  for (long i = 0; i < kConservationSteps; ++i) stepper.diffuse(state);
  const double secs = seconds_since(t0);
  const double rel = std::fabs(total_mass(state.u) - m0) / std::fabs(m0);
  return {rel <= kConservationRelTol && secs <= kConservationSeconds,
          "rel. mass error " + fmt(rel) + " (tol " + fmt(kConservationRelTol) + ") after " +
              std::to_string(kConservationSteps) + " diffusion steps, " + fmt(secs) + " s (limit " +
              fmt(kConservationSeconds) + " s)"};
}

Outcome fixed_point() {
  const SimParams p;
  const double us = find_homogeneous_fixed_point(p);
  const double residual = std::fabs(fixed_point_residual(us, p));
  const auto mask = std::make_shared<const DomainMask>(DomainMask::disc(185));
  auto state = MarbleState::homogeneous(mask, us, us);
  EulerStepper stepper(p);
  double drift = 0.0;
  for (long i = 0; i < kFixedPointSteps; ++i) {
    stepper.step(state, p.phi);
    if ((i + 1) % 1000 == 0) {
      for (int y = 0; y < mask->height(); ++y) {
        const auto sp = mask->row_span(y);
        for (int x = sp.begin; x < sp.end; ++x) {
          drift = std::max({drift, std::fabs(state.u.at(x, y) - us), std::fabs(state.v.at(x, y) - us)});
        }
      }
    }
  }
  return {residual <= kFixedPointResidual && drift <= kFixedPointDrift,
          "u* = " + format_double(us) + ", residual " + fmt(residual) + " (tol " + fmt(kFixedPointResidual) +
              "), max drift " + fmt(drift) + " over " + std::to_string(kFixedPointSteps) + " steps (tol " +
              fmt(kFixedPointDrift) + ")"};
}

Outcome excitability() {
  ScenarioConfig cfg = default_config();
  cfg.scan.step_budget = kPropagationBudget;
  const auto sup = test_propagation(cfg, 0.05);

  const SimParams p;
  const double us = find_homogeneous_fixed_point(p);
  const auto mask = std::make_shared<const DomainMask>(DomainMask::disc(185));
  auto state = MarbleState::homogeneous(mask, us, us);
  state.u.set(mask->center_x(), mask->center_y(), us + kSubThresholdKick);
  EulerStepper stepper(p);
  double peak_dev = 0.0;
  for (long i = 0; i < kSubThresholdSteps; ++i) {
    stepper.step(state, p.phi);
    peak_dev = std::max(peak_dev, std::fabs(state.u.at(mask->center_x(), mask->center_y()) - us));
  }
  double dev = 0.0;
  for (int y = 0; y < mask->height(); ++y) {
    const auto sp = mask->row_span(y);
    for (int x = sp.begin; x < sp.end; ++x) dev = std::max(dev, std::fabs(state.u.at(x, y) - us));
  }
  return {sup.propagated && sup.steps <= kPropagationBudget && dev <= kSubThresholdTol,
          "super-threshold: far cell crossed u*+" + fmt(cfg.scan.rise) + " at step " + std::to_string(sup.steps) +
              " (budget " + std::to_string(kPropagationBudget) + "); sub-threshold +" + fmt(kSubThresholdKick) +
              ": max |u-u*| " + fmt(dev) + " after " + std::to_string(kSubThresholdSteps) + " steps (tol " +
              fmt(kSubThresholdTol) + ")"};
}

Outcome photoinhibition(double* phi_c_out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = scan_phi(default_config(), kScanLo, kScanHi, kScanTol);
  auto trials = res.trials;
  std::sort(trials.begin(), trials.end());
  // Monotone: once a phi fails, every larger phi fails.
  bool monotone = true;
  bool failed = false;
  std::string trace;
  for (const auto& [phi, ok] : trials) {
    if (failed && ok) monotone = false;
    failed = failed || !ok;
    trace += (trace.empty() ? "" : " ") + fmt(phi) + (ok ? ":1" : ":0");
  }
  for (const auto& [phi, ok] : res.trials) {
    if (ok && phi >= res.phi_c) monotone = false;
    if (!ok && phi < res.phi_c) monotone = false;
  }
  *phi_c_out = res.phi_c;
  const bool frozen = std::fabs(res.phi_c - kFrozenPhiC) <= kPhiCTol;
  return {monotone && frozen,
          "phi_c = " + format_double(res.phi_c) + " (frozen " + fmt(kFrozenPhiC) + " +- " + fmt(kPhiCTol) +
              "), monotone " + (monotone ? "yes" : "no") + ", " + std::to_string(res.iterations) + " bisections in " +
              fmt(seconds_since(t0)) + " s; trials " + trace};
}

// Groups chronological events into transits: events within merge_window of
// the first event of a transit belong to it.
std::vector<std::pair<long, std::string>> transits(const std::vector<SpikeEvent>& events, long window) {
  std::vector<std::pair<long, std::string>> out;
  for (const auto& e : events) {
    const char sign = e.polarity == Polarity::positive ? '+' : '-';
    if (out.empty() || e.step - out.back().first >= window) {
      out.emplace_back(e.step, std::string(1, sign));
    } else {
      out.back().second += sign;
    }
  }
  return out;
}

Outcome fig3_shape(ScenarioRuns& runs) {
  const auto cfg = runs.config("fig3");
  const auto& art = runs.get("fig3", 1);
  const DetectorSettings ds;
  const auto tr = transits(detect_events(art.trace, ds), ds.merge_window);
  long west_birth = -1;
  for (const auto& [label, src] : cfg.sources)
    if (label == "west") west_birth = src.birth_step;
  if (tr.empty() || west_birth < 0) return {false, "no transits detected or no 'west' source in fig3.cfg"};

  const bool first_ok = tr.front().first < west_birth && tr.front().second == "+-";
  std::vector<std::string> west;
  for (const auto& [step, seq] : tr)
    if (step >= west_birth) west.push_back(seq);
  const bool consistent =
      !west.empty() && std::all_of(west.begin(), west.end(), [&](const std::string& s) { return s == west.front(); });
  const bool biphasic = !west.empty() && west.front().size() == 2 && west.front()[0] != west.front()[1];
  std::string seqs;
  for (const auto& [step, seq] : tr) seqs += (seqs.empty() ? "" : " ") + std::to_string(step) + ":" + seq;
  return {first_ok && consistent && biphasic && static_cast<int>(west.size()) >= kFig3MinWesternSpikes,
          "first transit " + tr.front().second + " (want +-), western epoch " + std::to_string(west.size()) +
              " transits (min " + std::to_string(kFig3MinWesternSpikes) + "), all '" +
              (west.empty() ? std::string("?") : west.front()) + "': " + (consistent ? "yes" : "no") +
              "; transits " + seqs};
}

double peak_to_peak(const PotentialTrace& t) {
  const auto v = t.potentials();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

Outcome fig4_angle(ScenarioRuns& runs) {
  const double p3 = peak_to_peak(runs.get("fig4_3oclock", 1).trace);
  const double p5 = peak_to_peak(runs.get("fig4_5oclock", 1).trace);
  const double ratio = p5 > 0.0 ? p3 / p5 : INFINITY;
  return {ratio >= kFig4MinRatio, "peak-to-peak 3 o'clock " + fmt(p3) + ", 5 o'clock " + fmt(p5) + ", ratio " +
                                      fmt(ratio) + " (min " + fmt(kFig4MinRatio) + ")"};
}

Outcome fig5_bursting(ScenarioRuns& runs) {
  const auto cfg = runs.config("fig5");
  const auto& art = runs.get("fig5", 1);
  std::vector<long> spawns;
  for (const auto& e : art.firing_log)
    if (e.kind == FiringKind::spawn) spawns.push_back(e.step);

  DetectorSettings ds;
  ds.hi = kFig5Hi;
  ds.lo = kFig5Lo;
  const auto spikes = detect_merged(art.trace, ds).spike_steps;
  // Each gap belongs to the epoch in which its closing spike occurs.
  std::map<std::size_t, std::vector<double>> by_epoch;
  for (std::size_t i = 1; i < spikes.size(); ++i) {
    const auto e = static_cast<std::size_t>(std::upper_bound(spawns.begin(), spawns.end(), spikes[i]) -
                                            spawns.begin()) - 1;
    by_epoch[e].push_back(static_cast<double>(spikes[i] - spikes[i - 1]));
  }
  // One-way decomposition of the gap variance: between + within = total.
  double n = 0.0;
  double grand = 0.0;
  for (const auto& [e, g] : by_epoch)
    for (double x : g) {
      grand += x;
      n += 1.0;
    }
  double between = 0.0;
  double within = 0.0;
  int multi = 0;
  if (n > 0.0) {
    grand /= n;
    for (const auto& [e, g] : by_epoch) {
      double mean = 0.0;
      for (double x : g) mean += x;
      mean /= static_cast<double>(g.size());
      between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
      for (double x : g) within += (x - mean) * (x - mean);
      multi += g.size() > 1;
    }
    between /= n;
    within /= n;
  }
  const bool epochs_ok = static_cast<long>(spawns.size()) >= kFig5MinEpochs;
  return {cfg.total_steps == kFig5Steps && epochs_ok && by_epoch.size() >= 2 && between > within,
          std::to_string(spawns.size()) + " source epochs (min " + std::to_string(kFig5MinEpochs) + ") in " +
              std::to_string(cfg.total_steps) + " steps; " + std::to_string(spikes.size()) + " spikes (hi " +
              fmt(kFig5Hi) + ", lo " + fmt(kFig5Lo) + "), " + std::to_string(static_cast<long>(n)) + " gaps over " +
              std::to_string(by_epoch.size()) + " epochs (" + std::to_string(multi) +
              " with >1 gap); gap variance between " + fmt(between) + " vs within " + fmt(within) + " steps^2"};
}

Outcome photoresponse(ScenarioRuns& runs, double phi_c) {
  const auto cfg = runs.config("photo");
  const auto& art = runs.get("photo", 1);
  const auto sched = cfg.schedule();
  const auto r = classify_response(art.trace, sched, DetectorSettings{});
  const bool above = r.lit.phi > phi_c;
  const bool resumed = r.latency_off && std::isfinite(*r.latency_off) && *r.latency_off > 0.0;
  return {above && r.halted && resumed && r.post.n_spikes > 0,
          "lit phi " + fmt(r.lit.phi) + " vs phi_c " + fmt(phi_c) + ", window " +
              fmt(static_cast<double>(r.lit.end - r.lit.start) * cfg.params.dt) + " time units; halted " +
              (r.halted ? "true" : "false") + ", spikes pre/during/post " + std::to_string(r.pre.n_spikes) + "/" +
              std::to_string(r.during.n_spikes) + "/" + std::to_string(r.post.n_spikes) + ", latency_off " +
              (r.latency_off ? fmt(*r.latency_off) : std::string("none")) + ", group " + to_string(r.group)};
}

Outcome determinism(ScenarioRuns& runs) {
  bool all = true;
  std::string detail;
  for (const auto& name : kCanonical) {
    const auto& a = runs.get(name, 1);
    const auto& b = runs.get(name, kParallelThreads);
    const bool same_trace = slurp(a.trace_path) == slurp(b.trace_path);
    const bool same_log = slurp(a.firing_log_path) == slurp(b.firing_log_path);
    all = all && same_trace && same_log;
    detail += (detail.empty() ? "" : ", ") + name + (same_trace && same_log ? " identical" : " DIFFERS");
  }
  return {all, "trace.csv and firing_log.csv, 1 vs " + std::to_string(kParallelThreads) + " threads: " + detail};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240611);
  int mismatched = 0;
  double worst = 0.0;
  long spikes = 0;
  for (int k = 0; k < kOracleTraces; ++k) {
    const auto t = oracle::random_trace(rng);
    PotentialTrace trace(t.stride, t.dt);
    for (std::size_t i = 0; i < t.values.size(); ++i)
      trace.append({t.steps[i], static_cast<double>(t.steps[i]) * t.dt, t.values[i], 0.05});
    const auto got = detect_spikes(trace, t.hi, t.lo);
    const auto want = oracle::spikes(t.steps, t.values, t.hi, t.lo);
    spikes += static_cast<long>(want.size());
    if (got.spike_steps != want) {
      ++mismatched;
      continue;
    }
    const auto a = period_stats(got, t.dt);
    const auto b = oracle::stats(want, t.dt);
    if (a.mean_period.has_value() != b.defined || a.n_spikes != want.size()) {
      ++mismatched;
      continue;
    }
    if (b.defined) {
      worst = std::max({worst, std::fabs(*a.mean_period - b.mean), std::fabs(*a.sigma - b.sigma)});
    }
  }
  return {mismatched == 0 && worst <= kOracleStatsTol,
          std::to_string(kOracleTraces) + " random traces, " + std::to_string(spikes) + " spikes, " +
              std::to_string(mismatched) + " index mismatches, max stats deviation " + fmt(worst) + " (tol " +
              fmt(kOracleStatsTol) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out_dir = "acceptance_out";
  std::vector<int> only;
  app.add_option("--out-dir", out_dir, "Scenario output directory");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  ScenarioRuns runs{fs::path(out_dir)};
  double phi_c = kFrozenPhiC;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"conservation", conservation},
      {"fixed point", fixed_point},
      {"excitability and propagation", excitability},
      {"photoinhibition threshold", [&] { return photoinhibition(&phi_c); }},
      {"fig3 shape", [&] { return fig3_shape(runs); }},
      {"fig4 angle dependence", [&] { return fig4_angle(runs); }},
      {"fig5 bursting", [&] { return fig5_bursting(runs); }},
      {"photoresponse", [&] { return photoresponse(runs, phi_c); }},
      {"determinism", [&] { return determinism(runs); }},
      {"analysis oracle equivalence", oracle_equivalence},
  };

  int failures = 0;
  int ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted(id)) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ". " << criteria[i].first << ": " << o.detail << '\n'
              << std::flush;
  }
  std::cout << ran - failures << "/" << ran << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
