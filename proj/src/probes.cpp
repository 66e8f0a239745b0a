#include "bzmarble/probes.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "bzmarble/error.hpp"
#include "bzmarble/numfmt.hpp"

namespace bzmarble {

ElectrodeProbe::ElectrodeProbe(CellRect rect, ElectrodeRole role, const DomainMask& mask)
    : rect_(rect), role_(role) {
  if (rect.width <= 0 || rect.height <= 0) throw InvalidProbe("electrode rectangle must have positive size");
  for (int y = rect.y0; y < rect.y0 + rect.height; ++y) {
    for (int x = rect.x0; x < rect.x0 + rect.width; ++x) {
      if (mask.active(x, y)) cells_.push_back(mask.padded_index(x, y));
    }
  }
  if (cells_.empty()) throw InvalidProbe("electrode rectangle covers no active cell");
}

double ElectrodeProbe::sum(const ScalarField& field) const noexcept {
  const double* data = field.data();
  double s = 0.0;
  for (std::size_t i : cells_) s += data[i];
  return s;
}

double measure_potential(const MarbleState& state, const ElectrodeProbe& e1, const ElectrodeProbe& e2) {
  return e2.sum(state.u) - e1.sum(state.u);
}

PotentialTrace::PotentialTrace(long record_every, double dt) : record_every_(record_every), dt_(dt) {
  if (record_every_ < 1) throw InvalidParameter("record_every must be at least 1");
  if (!(dt_ > 0.0)) throw InvalidParameter("trace dt must be positive");
}

bool PotentialTrace::record(const MarbleState& state, const ElectrodeProbe& e1, const ElectrodeProbe& e2,
                            const StimulusSchedule& schedule) {
  if (state.step_index % record_every_ != 0) return false;
  append({state.step_index, state.time(dt_), measure_potential(state, e1, e2), schedule.phi_at(state.step_index)});
  return true;
}

void PotentialTrace::append(const TraceSample& sample) {
  if (!samples_.empty() && sample.step != samples_.back().step + record_every_) {
    throw InvalidParameter("trace samples must advance by record_every steps");
  }
  if (!std::isfinite(sample.potential)) throw InvalidParameter("trace potential must be finite");
  samples_.push_back(sample);
}

std::vector<double> PotentialTrace::potentials() const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.potential);
  return out;
}

void PotentialTrace::write_csv(std::ostream& out) const {
  out << "step,time,potential,phi\n";
  for (const auto& s : samples_) {
    out << s.step << ',' << format_double(s.time) << ',' << format_double(s.potential) << ','
        << format_double(s.phi) << '\n';
  }
}

PotentialTrace PotentialTrace::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "step,time,potential,phi") {
    throw InvalidParameter("trace CSV must start with header 'step,time,potential,phi'");
  }
  std::vector<TraceSample> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view fields[4];
    for (int i = 0; i < 4; ++i) {
      const auto comma = rest.find(',');
      if ((i < 3) == (comma == std::string_view::npos)) {
        throw InvalidParameter("trace CSV line " + std::to_string(lineno) + ": expected 4 fields");
      }
      fields[i] = rest.substr(0, comma);
      if (i < 3) rest.remove_prefix(comma + 1);
    }
    const auto step = parse_long(fields[0]);
    const auto time = parse_double(fields[1]);
    const auto pot = parse_double(fields[2]);
    const auto phi = parse_double(fields[3]);
    if (!step || !time || !pot || !phi) {
      throw InvalidParameter("trace CSV line " + std::to_string(lineno) + ": malformed number");
    }
    rows.push_back({*step, *time, *pot, *phi});
  }
  if (rows.empty()) throw InvalidParameter("trace CSV has no samples");

  const long stride = rows.size() > 1 ? rows[1].step - rows[0].step : 1;
  double dt = 1.0;
  for (const auto& r : rows) {
    if (r.step != 0) {
      dt = r.time / static_cast<double>(r.step);
      break;
    }
  }
  if (stride < 1) throw InvalidParameter("trace CSV steps must be strictly increasing");
  PotentialTrace trace(stride, dt > 0.0 ? dt : 1.0);
  for (const auto& r : rows) trace.append(r);
  return trace;
}

}  // namespace bzmarble
