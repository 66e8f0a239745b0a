#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "bzmarble/kinetics.hpp"
#include "bzmarble/stimulation.hpp"

namespace bzmarble {

struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

enum class ElectrodeRole { reference, recording };

/// Rectangular virtual electrode. Only cells that are active in the mask
/// take part; the cell set is resolved once at construction.
class ElectrodeProbe {
 public:
  /// Throws InvalidProbe when the rectangle covers no active cell.
  ElectrodeProbe(CellRect rect, ElectrodeRole role, const DomainMask& mask);

  const CellRect& rect() const noexcept { return rect_; }
  ElectrodeRole role() const noexcept { return role_; }
  std::size_t active_cells() const noexcept { return cells_.size(); }

  /// Sum of `field` over the probe's active cells in row-major order.
  double sum(const ScalarField& field) const noexcept;

 private:
  CellRect rect_;
  ElectrodeRole role_;
  std::vector<std::size_t> cells_;  // padded indices, row-major
};

/// Sum of u over e2 minus sum of u over e1.
double measure_potential(const MarbleState& state, const ElectrodeProbe& e1, const ElectrodeProbe& e2);

struct TraceSample {
  long step = 0;
  double time = 0.0;
  double potential = 0.0;
  double phi = 0.0;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

/// Potential-difference series sampled every `record_every` steps.
class PotentialTrace {
 public:
  PotentialTrace(long record_every, double dt);

  long record_every() const noexcept { return record_every_; }
  double dt() const noexcept { return dt_; }
  const std::vector<TraceSample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  /// Appends a sample when state.step_index is a multiple of record_every;
  /// returns false (no sample) otherwise.
  bool record(const MarbleState& state, const ElectrodeProbe& e1, const ElectrodeProbe& e2,
              const StimulusSchedule& schedule);

  /// Appends a raw sample; steps must keep the record_every stride.
  void append(const TraceSample& sample);

  std::vector<double> potentials() const;

  /// CSV with header `step,time,potential,phi`, shortest round-trip decimals.
  void write_csv(std::ostream& out) const;
  /// Reads the CSV written by write_csv. Stride is inferred from the first
  /// two rows and dt from time/step. Throws InvalidParameter on bad input.
  static PotentialTrace read_csv(std::istream& in);

 private:
  long record_every_;
  double dt_;
  std::vector<TraceSample> samples_;
};

}  // namespace bzmarble
