#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "bzmarble/kinetics.hpp"

namespace bzmarble {

/// phi held at `phi` on steps in [start, end).
struct StimulusSegment {
  long start = 0;
  long end = 0;
  double phi = 0.0;

  friend bool operator==(const StimulusSegment&, const StimulusSegment&) = default;
};

/// Piecewise-constant illumination proxy phi(step).
class StimulusSchedule {
 public:
  /// Throws InvalidParameter for empty, unsorted or overlapping segments, or
  /// negative phi values.
  explicit StimulusSchedule(double base_phi, std::vector<StimulusSegment> segments = {});

  double base_phi() const noexcept { return base_phi_; }
  const std::vector<StimulusSegment>& segments() const noexcept { return segments_; }

  double phi_at(long step) const noexcept;
  /// Covering segment of `step`, if any.
  const StimulusSegment* segment_at(long step) const noexcept;

 private:
  double base_phi_;
  std::vector<StimulusSegment> segments_;
};

/// A point source that imposes u = amplitude on a small disc.
struct ExcitationSource {
  int x = 0;
  int y = 0;
  int radius = 3;
  long period = 1;
  long lifetime = 1;
  long birth_step = 0;
  double amplitude = 1.0;

  bool fires_at(long step) const noexcept {
    const long age = step - birth_step;
    return age >= 0 && age < lifetime && age % period == 0;
  }
  bool expired_at(long step) const noexcept { return step - birth_step >= lifetime; }

  friend bool operator==(const ExcitationSource&, const ExcitationSource&) = default;
};

/// Sets u to the source amplitude on active cells within its radius; v is
/// untouched. Returns false (and changes nothing) when no active cell is
/// covered.
bool excite(MarbleState& state, const ExcitationSource& source);

enum class FiringKind { spawn, fire, expire };
std::string_view to_string(FiringKind kind) noexcept;

struct FiringEvent {
  long step = 0;
  FiringKind kind = FiringKind::fire;
  int x = 0;
  int y = 0;
  long period = 0;
  long lifetime = 0;

  friend bool operator==(const FiringEvent&, const FiringEvent&) = default;
};

/// Inclusive integer range.
struct StepRange {
  long lo = 0;
  long hi = 0;
  friend bool operator==(const StepRange&, const StepRange&) = default;
};

struct SourceManagerSettings {
  StepRange period{100, 700};
  StepRange lifetime{1300, 6300};
  int radius = 3;
  double amplitude = 1.0;
  /// New sources keep at least this many cells (and at least `radius`)
  /// between their centre and the rim.
  int rim_band = 5;

  friend bool operator==(const SourceManagerSettings&, const SourceManagerSettings&) = default;
};

/// Uniform integer in [lo, hi] from a 64-bit engine by rejection sampling.
/// Unlike std::uniform_int_distribution the output sequence is fixed by the
/// engine alone, so it is identical across standard libraries.
long uniform_int(std::mt19937_64& engine, long lo, long hi);

/// Keeps exactly one live source; when it expires a replacement is drawn
/// with uniformly random position, period and lifetime.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard; draws per spawn are (position index, period, lifetime).
class SourceManager {
 public:
  SourceManager(const DomainMask& mask, SourceManagerSettings settings, std::uint64_t seed);

  const std::optional<ExcitationSource>& current() const noexcept { return current_; }
  const SourceManagerSettings& settings() const noexcept { return settings_; }
  std::size_t candidate_count() const noexcept { return candidates_.size(); }

  /// Replace an expired (or absent) source, then fire the live one if due.
  /// Events are appended to `log` when given.
  void advance(MarbleState& state, long step, std::vector<FiringEvent>* log = nullptr);

 private:
  SourceManagerSettings settings_;
  std::mt19937_64 engine_;
  std::vector<std::pair<int, int>> candidates_;
  std::optional<ExcitationSource> current_;
};

/// Fires scripted sources that are due at `step` and logs spawn/expire events.
/// Returns how many firings covered no active cell (no-ops).
int advance_scripted(const std::vector<ExcitationSource>& sources, MarbleState& state, long step,
                      std::vector<FiringEvent>* log = nullptr);

}  // namespace bzmarble
