#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bzmarble/analysis.hpp"
#include "bzmarble/error.hpp"
#include "bzmarble/scenario.hpp"
#include "doctest.h"

using namespace bzmarble;

namespace {

const char* kMinimal = "domain.radius = 185\nrun.total_steps = 100\nrun.seed = 7\n";

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bzmarble_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal config fills the defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.params.eps == 0.02);
  CHECK(c.params.f == 1.4);
  CHECK(c.params.q == 0.002);
  CHECK(c.params.phi == 0.05);
  CHECK(c.params.dt == 0.001);
  CHECK(c.params.dx == 0.25);
  CHECK(c.params.d_u == 1.0);
  CHECK(c.radius == 185);
  CHECK(c.total_steps == 100);
  CHECK(c.seed == 7);
  CHECK(c.record_every == 10);
  CHECK(c.snapshot_every == 500);
  const auto [e1, e2] = default_electrodes(185);
  CHECK(c.electrode1 == e1);
  CHECK(c.electrode2 == e2);
  CHECK(e1 == CellRect{172, 20, 6, 20});
  CHECK(e2 == CellRect{192, 20, 6, 20});
  // 14-cell gap between the rectangles.
  CHECK(e2.x0 - (e1.x0 + e1.width) == 14);
  CHECK(c.segments.empty());
  CHECK(c.sources.empty());
  CHECK_FALSE(c.manager.has_value());
}

TEST_CASE("default electrodes lie fully inside the disc") {
  for (int r : {40, 100, 185}) {
    const auto mask = DomainMask::disc(r);
    const auto [e1, e2] = default_electrodes(r);
    for (const auto& rect : {e1, e2}) {
      const ElectrodeProbe probe(rect, ElectrodeRole::reference, mask);
      CHECK(probe.active_cells() == static_cast<std::size_t>(rect.width * rect.height));
    }
  }
}

TEST_CASE("stability guard is a config error on the params line") {
  const std::string text = std::string(kMinimal) + "# dt * d_u / dx^2 = 0.3\nparams.dt = 0.01875\n";
  CHECK(config_error_line(text) == 5);
  CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("stability"), ConfigError);
}

TEST_CASE("config errors carry line numbers") {
  CHECK(config_error_line("domain.radius = 185\nrun.total_steps = 100\n") == 0);  // missing seed
  CHECK(config_error_line(std::string(kMinimal) + "params.bogus = 1\n") == 4);
  CHECK(config_error_line(std::string(kMinimal) + "run.seed = 8\n") == 4);
  CHECK(config_error_line(std::string(kMinimal) + "params.eps = abc\n") == 4);
  CHECK(config_error_line(std::string(kMinimal) + "params.eps 0.02\n") == 4);
  CHECK(config_error_line(std::string(kMinimal) + "schedule.segment = 0 100 0.1\nschedule.segment = 50 150 0.1\n") ==
        5);
  CHECK(config_error_line(std::string(kMinimal) + "electrode1.rect = 500 20 6 20\n") == 4);
  CHECK(config_error_line(std::string(kMinimal) + "electrode1.rect = 0 0 2 2\n") == 4);
  CHECK(config_error_line(std::string(kMinimal) + "source.a.center = 185 185\nmanager.enabled = true\n") == 5);
  CHECK(config_error_line(std::string(kMinimal) + "source.a.radius = 3\n") == 4);
  CHECK(config_error_line("domain.radius = 1\nrun.total_steps = 100\nrun.seed = 1\n") == 1);
  CHECK(config_error_line("domain.radius = 185\nrun.total_steps = 0\nrun.seed = 1\n") == 2);
  CHECK(config_error_line("domain.radius = 185\nrun.total_steps = 10\nrun.seed = -1\n") == 3);
}

TEST_CASE("segments are sorted on parse") {
  const auto c =
      parse_config(std::string(kMinimal) + "schedule.segment = 500 600 0.1\nschedule.segment = 0 100 0.12\n");
  REQUIRE(c.segments.size() == 2);
  CHECK(c.segments[0].start == 0);
  CHECK(c.segments[1].phi == 0.1);
  CHECK(c.schedule().phi_at(50) == 0.12);
}

TEST_CASE("echo round trip") {
  const std::string text = std::string(kMinimal) +
                           "params.phi = 0.06\n"
                           "run.output_dir = some dir/with spaces\n"
                           "schedule.segment = 1000 2000 0.1\n"
                           "source.west.center = 35 185\n"
                           "source.west.period = 6000\n"
                           "source.west.lifetime = 40000\n"
                           "source.east.center = 335 185\n"
                           "scan.rise = 0.25\n";
  const auto c = parse_config(text);
  const auto echo = echo_config(c);
  const auto again = parse_config(echo);
  CHECK(again == c);
  CHECK(echo_config(again) == echo);
  CHECK(c.output_dir == "some dir/with spaces");
  REQUIRE(c.sources.size() == 2);
  CHECK(c.sources[0].first == "west");

  const auto m = parse_config(std::string(kMinimal) + "manager.enabled = true\nmanager.period = 1 1\n");
  REQUIRE(m.manager);
  CHECK(m.manager->period == StepRange{1, 1});
  CHECK(parse_config(echo_config(m)) == m);
}

TEST_CASE("run_scenario writes artifacts and reruns identically from the echo") {
  const auto dir = scratch_dir("run");
  ScenarioConfig c = parse_config(
      "domain.radius = 30\nrun.total_steps = 250\nrun.seed = 3\nrun.record_every = 5\n"
      "run.snapshot_every = 100\nrun.snapshot_csv = true\n"
      "electrode1.rect = 17 5 6 6\nelectrode2.rect = 37 5 6 6\n"
      "source.s.center = 50 30\nsource.s.period = 100\nsource.s.lifetime = 250\n");
  c.output_dir = (dir / "a").string();
  const auto art = run_scenario(c);
  CHECK(art.trace.size() == 51);
  CHECK(art.trace.samples().front().step == 0);
  CHECK(art.snapshot_paths.size() == 6);  // steps 0, 100, 200 as pgm + csv
  CHECK(std::filesystem::exists(dir / "a" / "snapshots" / "000000100.pgm"));
  CHECK(std::filesystem::exists(art.trace_path));
  CHECK(slurp(art.firing_log_path).rfind("step,event,x,y,period,lifetime\n0,spawn,50,30,100,250\n0,fire,", 0) == 0);

  ScenarioConfig echo = load_config(art.config_echo_path);
  CHECK(echo == c);
  echo.output_dir = (dir / "b").string();
  const auto art2 = run_scenario(echo);
  CHECK(slurp(art.trace_path) == slurp(art2.trace_path));
  CHECK(slurp(art.firing_log_path) == slurp(art2.firing_log_path));

  // Threads do not change the bytes.
  echo.output_dir = (dir / "c").string();
  const auto art3 = run_scenario(echo, RunOptions{3, true});
  CHECK(slurp(art.trace_path) == slurp(art3.trace_path));
  std::filesystem::remove_all(dir);
}

TEST_CASE("scripted source outside the disc warns") {
  ScenarioConfig c = parse_config(
      "domain.radius = 20\nrun.total_steps = 5\nrun.seed = 1\nrun.snapshot_every = 0\n"
      "electrode1.rect = 7 2 6 6\nelectrode2.rect = 27 2 6 6\nsource.c.center = 0 0\n");
  const auto art = run_scenario(c, RunOptions{1, false});
  REQUIRE(art.warnings.size() == 1);
  CHECK(art.warnings[0].find("step 0") != std::string::npos);
}

TEST_CASE("scan_phi degenerate cases") {
  ScenarioConfig c = parse_config(
      "domain.radius = 60\nrun.total_steps = 1\nrun.seed = 1\n"
      "electrode1.rect = 47 5 6 6\nelectrode2.rect = 67 5 6 6\n");
  CHECK_THROWS_AS(scan_phi(c, 0.1, 0.1, 0.002), InvalidBracket);
  CHECK_THROWS_AS(scan_phi(c, 0.2, 0.1, 0.002), InvalidBracket);
  const auto r = scan_phi(c, 0.05, 0.20, 1.0);
  CHECK(r.iterations == 0);
  CHECK(r.phi_c == doctest::Approx(0.125));
  REQUIRE(r.trials.size() == 2);
  CHECK(r.trials[0] == std::pair<double, bool>{0.05, true});
  CHECK(r.trials[1] == std::pair<double, bool>{0.20, false});
  // Both ends propagate.
  CHECK_THROWS_AS(scan_phi(c, 0.04, 0.05, 0.002), InvalidBracket);
}

TEST_CASE("sub-threshold perturbation decays, super-threshold propagates") {
  ScenarioConfig c = parse_config(
      "domain.radius = 60\nrun.total_steps = 1\nrun.seed = 1\n"
      "electrode1.rect = 47 5 6 6\nelectrode2.rect = 67 5 6 6\n");
  const auto out = test_propagation(c, 0.05);
  CHECK(out.propagated);
  CHECK(out.steps > 0);

  const SimParams p;
  const double us = find_homogeneous_fixed_point(p);
  const auto mask = std::make_shared<const DomainMask>(DomainMask::disc(60));
  auto s = MarbleState::homogeneous(mask, us, us);
  s.u.set(60, 60, us + 0.01);
  EulerStepper stepper(p);
  for (int i = 0; i < 10000; ++i) stepper.step(s, p.phi);
  double worst = 0.0;
  for (int y = 0; y < mask->height(); ++y) {
    const auto sp = mask->row_span(y);
    for (int x = sp.begin; x < sp.end; ++x) worst = std::max(worst, std::fabs(s.u.at(x, y) - us));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("single periodic source: steady-state spike period equals the source period") {
  // After the first transit the gaps settle on the source period exactly
  // (within two samples). The first gap is longer: the first wave runs into
  // fully recovered medium and is faster than its successors.
  ScenarioConfig c = parse_config(
      "domain.radius = 100\nrun.total_steps = 42000\nrun.seed = 1\nrun.snapshot_every = 0\n"
      "source.w.center = 15 100\nsource.w.period = 6000\nsource.w.lifetime = 42000\n");
  const auto art = run_scenario(c, RunOptions{1, false});
  const auto train = detect_merged(art.trace, DetectorSettings{});
  REQUIRE(train.spike_steps.size() >= 5);
  const long tol = 2 * c.record_every;
  for (std::size_t i = 2; i < train.spike_steps.size(); ++i) {
    CHECK(std::labs(train.spike_steps[i] - train.spike_steps[i - 1] - 6000) <= tol);
  }
}
