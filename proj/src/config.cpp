// Flat `key = value` scenario configuration: parsing, validation and echo.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bzmarble/error.hpp"
#include "bzmarble/numfmt.hpp"
#include "bzmarble/scenario.hpp"

namespace bzmarble {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

struct Line {
  int number;
  std::string key;
  std::string value;
};

class Reader {
 public:
  explicit Reader(const Line& line) : line_(line), toks_(tokens(line.value)) {}

  void expect_count(std::size_t n) const {
    if (toks_.size() != n) fail("expected " + std::to_string(n) + " value(s), got " + std::to_string(toks_.size()));
  }
  double real(std::size_t i) const {
    const auto v = parse_double(toks_.at(i));
    if (!v || !std::isfinite(*v)) fail("not a finite number: '" + std::string(toks_.at(i)) + "'");
    return *v;
  }
  long integer(std::size_t i) const {
    const auto v = parse_long(toks_.at(i));
    if (!v) fail("not an integer: '" + std::string(toks_.at(i)) + "'");
    return *v;
  }
  std::uint64_t unsigned64(std::size_t i) const {
    const auto t = toks_.at(i);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) fail("not an unsigned integer: '" + std::string(t) + "'");
    return v;
  }
  bool boolean(std::size_t i) const {
    if (toks_.at(i) == "true") return true;
    if (toks_.at(i) == "false") return false;
    fail("expected true or false");
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(line_.number, line_.key + ": " + what); }

  double one_real() const {
    expect_count(1);
    return real(0);
  }
  long one_integer() const {
    expect_count(1);
    return integer(0);
  }

 private:
  const Line& line_;
  std::vector<std::string_view> toks_;
};

int to_int(const Reader& r, long v) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) r.fail("value out of range");
  return static_cast<int>(v);
}

CellRect read_rect(const Reader& r) {
  r.expect_count(4);
  const CellRect rect{to_int(r, r.integer(0)), to_int(r, r.integer(1)), to_int(r, r.integer(2)),
                      to_int(r, r.integer(3))};
  if (rect.width <= 0 || rect.height <= 0) r.fail("rectangle width and height must be positive");
  return rect;
}

StepRange read_range(const Reader& r) {
  r.expect_count(2);
  const StepRange range{r.integer(0), r.integer(1)};
  if (range.lo < 1 || range.hi < range.lo) r.fail("range must satisfy 1 <= lo <= hi");
  return range;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::pair<CellRect, CellRect> default_electrodes(int radius) {
  const int cx = radius;
  const int y0 = 20;
  return {CellRect{cx - 13, y0, 6, 20}, CellRect{cx + 7, y0, 6, 20}};
}

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig cfg;
  std::map<std::string, int> seen;  // key -> line
  std::vector<std::pair<StimulusSegment, int>> segments;
  std::map<std::string, std::pair<ExcitationSource, int>> sources;
  std::vector<std::string> source_order;
  std::map<std::string, std::set<std::string>> source_fields;
  bool manager_enabled = false;
  SourceManagerSettings manager;
  int manager_line = 0;

  using Handler = std::function<void(const Reader&)>;
  const std::map<std::string, Handler> handlers = {
      {"domain.radius", [&](const Reader& r) { cfg.radius = to_int(r, r.one_integer()); }},
      {"run.total_steps", [&](const Reader& r) { cfg.total_steps = r.one_integer(); }},
      {"run.record_every", [&](const Reader& r) { cfg.record_every = r.one_integer(); }},
      {"run.snapshot_every", [&](const Reader& r) { cfg.snapshot_every = r.one_integer(); }},
      {"run.snapshot_csv", [&](const Reader& r) { r.expect_count(1); cfg.snapshot_csv = r.boolean(0); }},
      {"run.seed", [&](const Reader& r) { r.expect_count(1); cfg.seed = r.unsigned64(0); }},
      {"run.output_dir", [](const Reader&) {}},  // handled inline: the trimmed value verbatim
      {"params.eps", [&](const Reader& r) { cfg.params.eps = r.one_real(); }},
      {"params.f", [&](const Reader& r) { cfg.params.f = r.one_real(); }},
      {"params.q", [&](const Reader& r) { cfg.params.q = r.one_real(); }},
      {"params.phi", [&](const Reader& r) { cfg.params.phi = r.one_real(); }},
      {"params.d_u", [&](const Reader& r) { cfg.params.d_u = r.one_real(); }},
      {"params.dt", [&](const Reader& r) { cfg.params.dt = r.one_real(); }},
      {"params.dx", [&](const Reader& r) { cfg.params.dx = r.one_real(); }},
      {"params.nonnegative_u", [&](const Reader& r) { r.expect_count(1); cfg.params.nonnegative_u = r.boolean(0); }},
      {"electrode1.rect", [&](const Reader& r) { cfg.electrode1 = read_rect(r); }},
      {"electrode2.rect", [&](const Reader& r) { cfg.electrode2 = read_rect(r); }},
      {"manager.enabled", [&](const Reader& r) { r.expect_count(1); manager_enabled = r.boolean(0); }},
      {"manager.period", [&](const Reader& r) { manager.period = read_range(r); }},
      {"manager.lifetime", [&](const Reader& r) { manager.lifetime = read_range(r); }},
      {"manager.radius", [&](const Reader& r) { manager.radius = to_int(r, r.one_integer()); }},
      {"manager.amplitude", [&](const Reader& r) { manager.amplitude = r.one_real(); }},
      {"manager.rim_band", [&](const Reader& r) { manager.rim_band = to_int(r, r.one_integer()); }},
      {"scan.step_budget", [&](const Reader& r) { cfg.scan.step_budget = r.one_integer(); }},
      {"scan.distance", [&](const Reader& r) { cfg.scan.distance = to_int(r, r.one_integer()); }},
      {"scan.rise", [&](const Reader& r) { cfg.scan.rise = r.one_real(); }},
      {"scan.stimulus_radius", [&](const Reader& r) { cfg.scan.stimulus_radius = to_int(r, r.one_integer()); }},
      {"scan.stimulus_amplitude", [&](const Reader& r) { cfg.scan.stimulus_amplitude = r.one_real(); }},
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  bool electrodes_given[2] = {false, false};
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view sv(raw);
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) throw ConfigError(lineno, "expected 'key = value'");
    const Line line{lineno, std::string(trim(sv.substr(0, eq))), std::string(trim(sv.substr(eq + 1)))};
    if (line.key.empty()) throw ConfigError(lineno, "empty key");
    if (line.value.empty()) throw ConfigError(lineno, line.key + ": missing value");
    const Reader reader(line);

    if (line.key == "schedule.segment") {
      reader.expect_count(3);
      const StimulusSegment seg{reader.integer(0), reader.integer(1), reader.real(2)};
      if (seg.start < 0 || seg.end <= seg.start) reader.fail("segment must satisfy 0 <= start < end");
      if (seg.phi < 0.0) reader.fail("segment phi must be non-negative");
      segments.emplace_back(seg, lineno);
      continue;
    }

    if (line.key.rfind("source.", 0) == 0) {
      const auto dot = line.key.find('.', 7);
      if (dot == std::string::npos || dot == 7) throw ConfigError(lineno, "unknown key '" + line.key + "'");
      const std::string label = line.key.substr(7, dot - 7);
      const std::string field = line.key.substr(dot + 1);
      if (!sources.count(label)) {
        sources[label] = {ExcitationSource{}, lineno};
        source_order.push_back(label);
      }
      if (!source_fields[label].insert(field).second) reader.fail("duplicate key");
      ExcitationSource& src = sources[label].first;
      if (field == "center") {
        reader.expect_count(2);
        src.x = to_int(reader, reader.integer(0));
        src.y = to_int(reader, reader.integer(1));
      } else if (field == "radius") {
        src.radius = to_int(reader, reader.one_integer());
        if (src.radius < 0) reader.fail("radius must be non-negative");
      } else if (field == "period") {
        src.period = reader.one_integer();
        if (src.period < 1) reader.fail("period must be at least 1");
      } else if (field == "lifetime") {
        src.lifetime = reader.one_integer();
        if (src.lifetime < 1) reader.fail("lifetime must be at least 1");
      } else if (field == "birth") {
        src.birth_step = reader.one_integer();
        if (src.birth_step < 0) reader.fail("birth must be non-negative");
      } else if (field == "amplitude") {
        src.amplitude = reader.one_real();
      } else {
        throw ConfigError(lineno, "unknown key '" + line.key + "'");
      }
      continue;
    }

    const auto it = handlers.find(line.key);
    if (it == handlers.end()) throw ConfigError(lineno, "unknown key '" + line.key + "'");
    if (!seen.emplace(line.key, lineno).second) reader.fail("duplicate key");
    if (line.key == "run.output_dir") {
      cfg.output_dir = line.value;
      continue;
    }
    if (line.key.rfind("manager.", 0) == 0) manager_line = lineno;
    if (line.key == "electrode1.rect") electrodes_given[0] = true;
    if (line.key == "electrode2.rect") electrodes_given[1] = true;
    it->second(reader);
  }

  auto line_of = [&](const std::string& key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  };
  for (const char* key : {"domain.radius", "run.total_steps", "run.seed"}) {
    if (!seen.count(key)) throw ConfigError(0, std::string("missing required key '") + key + "'");
  }

  if (cfg.radius < 2) throw ConfigError(line_of("domain.radius"), "domain.radius must be at least 2");
  if (cfg.total_steps < 1) throw ConfigError(line_of("run.total_steps"), "run.total_steps must be at least 1");
  if (cfg.record_every < 1) throw ConfigError(line_of("run.record_every"), "run.record_every must be at least 1");
  if (cfg.snapshot_every < 0) {
    throw ConfigError(line_of("run.snapshot_every"), "run.snapshot_every must be non-negative");
  }

  try {
    cfg.params.validate();
  } catch (const InvalidParameter& e) {
    int line = 0;
    for (const char* key : {"params.eps", "params.f", "params.q", "params.phi", "params.d_u", "params.dt",
                            "params.dx"}) {
      line = std::max(line, line_of(key));
    }
    throw ConfigError(line, e.what());
  }

  std::stable_sort(segments.begin(), segments.end(),
                   [](const auto& a, const auto& b) { return a.first.start < b.first.start; });
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0 && segments[i].first.start < segments[i - 1].first.end) {
      throw ConfigError(std::max(segments[i].second, segments[i - 1].second), "schedule segments overlap");
    }
    cfg.segments.push_back(segments[i].first);
  }

  const int side = 2 * cfg.radius + 1;
  const auto defaults = default_electrodes(cfg.radius);
  if (!electrodes_given[0]) cfg.electrode1 = defaults.first;
  if (!electrodes_given[1]) cfg.electrode2 = defaults.second;
  const auto mask = DomainMask::disc(cfg.radius);
  for (int e = 0; e < 2; ++e) {
    const CellRect& r = e == 0 ? cfg.electrode1 : cfg.electrode2;
    const int line = line_of(e == 0 ? "electrode1.rect" : "electrode2.rect");
    if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.width > side || r.y0 + r.height > side) {
      throw ConfigError(line, "electrode" + std::to_string(e + 1) + " lies outside the domain bounding box");
    }
    try {
      ElectrodeProbe probe(r, ElectrodeRole::reference, mask);
    } catch (const InvalidProbe& ex) {
      throw ConfigError(line, "electrode" + std::to_string(e + 1) + ": " + ex.what());
    }
  }

  for (const auto& label : source_order) {
    const auto& [src, line] = sources[label];
    if (!source_fields[label].count("center")) throw ConfigError(line, "source." + label + " needs a center");
    if (src.x < 0 || src.y < 0 || src.x >= side || src.y >= side) {
      throw ConfigError(line, "source." + label + " lies outside the domain bounding box");
    }
    cfg.sources.emplace_back(label, src);
  }

  if (manager_enabled) {
    if (!cfg.sources.empty()) {
      throw ConfigError(manager_line, "scripted sources and the source manager are mutually exclusive");
    }
    cfg.manager = manager;
  } else if (manager_line > 0 && !(manager == SourceManagerSettings{})) {
    throw ConfigError(manager_line, "manager settings given but manager.enabled is not true");
  }

  if (cfg.scan.step_budget < 1 || cfg.scan.distance < 0 || cfg.scan.stimulus_radius < 0) {
    throw ConfigError(0, "scan settings out of range");
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const ScenarioConfig& c) {
  std::ostringstream os;
  auto rect = [](const CellRect& r) {
    return std::to_string(r.x0) + " " + std::to_string(r.y0) + " " + std::to_string(r.width) + " " +
           std::to_string(r.height);
  };
  os << "# effective configuration\n"
     << "domain.radius = " << c.radius << "\n"
     << "run.total_steps = " << c.total_steps << "\n"
     << "run.record_every = " << c.record_every << "\n"
     << "run.snapshot_every = " << c.snapshot_every << "\n"
     << "run.snapshot_csv = " << (c.snapshot_csv ? "true" : "false") << "\n"
     << "run.seed = " << c.seed << "\n"
     << "run.output_dir = " << c.output_dir << "\n"
     << "params.eps = " << fmt(c.params.eps) << "\n"
     << "params.f = " << fmt(c.params.f) << "\n"
     << "params.q = " << fmt(c.params.q) << "\n"
     << "params.phi = " << fmt(c.params.phi) << "\n"
     << "params.d_u = " << fmt(c.params.d_u) << "\n"
     << "params.dt = " << fmt(c.params.dt) << "\n"
     << "params.dx = " << fmt(c.params.dx) << "\n"
     << "params.nonnegative_u = " << (c.params.nonnegative_u ? "true" : "false") << "\n"
     << "electrode1.rect = " << rect(c.electrode1) << "\n"
     << "electrode2.rect = " << rect(c.electrode2) << "\n";
  for (const auto& s : c.segments) {
    os << "schedule.segment = " << s.start << " " << s.end << " " << fmt(s.phi) << "\n";
  }
  for (const auto& [label, s] : c.sources) {
    const std::string p = "source." + label + ".";
    os << p << "center = " << s.x << " " << s.y << "\n"
       << p << "radius = " << s.radius << "\n"
       << p << "period = " << s.period << "\n"
       << p << "lifetime = " << s.lifetime << "\n"
       << p << "birth = " << s.birth_step << "\n"
       << p << "amplitude = " << fmt(s.amplitude) << "\n";
  }
  if (c.manager) {
    const auto& m = *c.manager;
    os << "manager.enabled = true\n"
       << "manager.period = " << m.period.lo << " " << m.period.hi << "\n"
       << "manager.lifetime = " << m.lifetime.lo << " " << m.lifetime.hi << "\n"
       << "manager.radius = " << m.radius << "\n"
       << "manager.amplitude = " << fmt(m.amplitude) << "\n"
       << "manager.rim_band = " << m.rim_band << "\n";
  }
  os << "scan.step_budget = " << c.scan.step_budget << "\n"
     << "scan.distance = " << c.scan.distance << "\n"
     << "scan.rise = " << fmt(c.scan.rise) << "\n"
     << "scan.stimulus_radius = " << c.scan.stimulus_radius << "\n"
     << "scan.stimulus_amplitude = " << fmt(c.scan.stimulus_amplitude) << "\n";
  return os.str();
}

}  // namespace bzmarble
