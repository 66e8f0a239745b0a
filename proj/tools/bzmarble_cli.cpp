// bzmarble: run scenarios, scan the photoinhibition threshold, analyse traces.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "bzmarble/analysis.hpp"
#include "bzmarble/error.hpp"
#include "bzmarble/numfmt.hpp"
#include "bzmarble/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitBlowUp = 2;

std::string opt_text(const std::optional<double>& v) { return v ? bzmarble::format_double(*v) : ""; }

}  // namespace

int main(int argc, char** argv) {
  using namespace bzmarble;

  CLI::App app{"Liquid-marble BZ photosensor simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config_path, "Scenario config file")->required();
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--out-dir", out_dir, "Override run.output_dir");
  run->add_option("--threads", threads, "Worker threads for the stencil")->check(CLI::PositiveNumber);

  double lo = 0.05;
  double hi = 0.20;
  double tol = 0.002;
  auto* scan = app.add_subcommand("scan-phi", "Bisect the phi at which wave propagation fails");
  scan->add_option("config", config_path, "Scenario config file")->required();
  scan->add_option("--lo", lo, "Lower phi (must propagate)");
  scan->add_option("--hi", hi, "Upper phi (must fail)");
  scan->add_option("--tol", tol, "Bracket width to stop at");
  scan->add_option("--threads", threads, "Worker threads for the stencil")->check(CLI::PositiveNumber);

  std::string trace_path;
  std::optional<double> th_hi;
  std::optional<double> th_lo;
  std::string stats_path;
  std::optional<std::string> response_config;
  long merge_window = DetectorSettings{}.merge_window;
  auto* analyze = app.add_subcommand("analyze", "Spike statistics of a trace CSV");
  analyze->add_option("trace", trace_path, "Trace CSV (step,time,potential,phi)")->required();
  analyze->add_option("--hi", th_hi, "Upper hysteresis threshold");
  analyze->add_option("--lo", th_lo, "Lower hysteresis threshold");
  analyze->add_option("--merge-window", merge_window, "Steps within which events count once");
  analyze->add_option("--stats-out", stats_path, "Write stats CSV here instead of stdout");
  analyze->add_option("--response", response_config,
                      "Scenario config whose schedule defines the lit window; prints a response report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig cfg = load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (out_dir) cfg.output_dir = *out_dir;
      const auto art = run_scenario(cfg, RunOptions{threads, true});
      for (const auto& w : art.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "trace: " << art.trace_path.string() << '\n'
                << "firing log: " << art.firing_log_path.string() << '\n'
                << "config echo: " << art.config_echo_path.string() << '\n'
                << "snapshots: " << art.snapshot_paths.size() << '\n';
    } else if (*scan) {
      const ScenarioConfig cfg = load_config(config_path);
      const auto res = scan_phi(cfg, lo, hi, tol, threads);
      std::cout << "phi,propagated\n";
      for (const auto& [phi, ok] : res.trials) std::cout << format_double(phi) << ',' << (ok ? 1 : 0) << '\n';
      std::cout << "phi_c = " << format_double(res.phi_c) << '\n';
    } else if (*analyze) {
      std::ifstream in(trace_path);
      if (!in) throw Error("cannot open trace '" + trace_path + "'");
      const auto trace = PotentialTrace::read_csv(in);
      DetectorSettings ds;
      ds.hi = th_hi;
      ds.lo = th_lo;
      ds.merge_window = merge_window;
      const auto stats = period_stats(detect_merged(trace, ds), trace.dt());
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!stats_path.empty()) {
        file.open(stats_path);
        if (!file) throw Error("cannot write '" + stats_path + "'");
        out = &file;
      }
      *out << "n_spikes,mean_period,sigma,classification\n"
           << stats.n_spikes << ',' << opt_text(stats.mean_period) << ',' << opt_text(stats.sigma) << ','
           << (stats.classification ? to_string(*stats.classification) : "") << '\n';
      if (response_config) {
        const ScenarioConfig cfg = load_config(*response_config);
        std::cout << format_response(classify_response(trace, cfg.schedule(), ds));
      }
    }
  } catch (const BlowUpError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
