#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bzmarble/probes.hpp"
#include "bzmarble/stimulation.hpp"

namespace bzmarble {

/// Mean inter-spike period above which a marble counts as low frequency.
inline constexpr double kLowFrequencyPeriod = 240.0;

struct SpikeTrain {
  std::vector<long> spike_steps;
  double threshold_hi = 0.0;
  double threshold_lo = 0.0;
};

struct Thresholds {
  double hi = 0.0;
  double lo = 0.0;
};

/// Hysteresis detector over (step, value) samples.
///
/// An excursion opens at the first sample >= hi while idle and closes at the
/// first later sample < lo. Each closed excursion yields one spike at its
/// maximum (earliest sample on ties); an excursion still open at the end of
/// the trace yields nothing. Throws InvalidThreshold when hi <= lo.
SpikeTrain detect_spikes(std::span<const long> steps, std::span<const double> values, double hi, double lo);
SpikeTrain detect_spikes(const PotentialTrace& trace, double hi, double lo);

/// hi = b + 0.3 (max - b), lo = b + 0.1 (max - b) with b the median.
/// Empty when the trace never rises above its median.
std::optional<Thresholds> default_thresholds(std::span<const double> values);

enum class FrequencyClass { low_frequency, typical };
std::string to_string(FrequencyClass c);

struct SpikeStats {
  std::size_t n_spikes = 0;
  std::optional<double> mean_period;
  std::optional<double> sigma;  // population standard deviation
  std::optional<FrequencyClass> classification;
};

/// Period statistics of consecutive spike gaps converted to time.
/// Mean and sigma are absent for fewer than two spikes.
SpikeStats period_stats(const SpikeTrain& train, double dt_per_step);

/// Options for polarity-merged event detection on a potential trace.
struct DetectorSettings {
  /// Explicit thresholds; when absent they come from default_thresholds,
  /// computed separately for the trace and its negation.
  std::optional<double> hi;
  std::optional<double> lo;
  /// Also detect downward spikes on the negated trace.
  bool both_polarities = true;
  /// Events closer than this (in steps) to the previous kept event are
  /// folded into it, so one biphasic transit counts once.
  long merge_window = 1500;
};

enum class Polarity { positive, negative };

struct SpikeEvent {
  long step = 0;
  Polarity polarity = Polarity::positive;
  double peak = 0.0;  // signed potential at the peak
};

/// Positive and (optionally) negative spikes in chronological order, with no
/// merging applied.
std::vector<SpikeEvent> detect_events(const PotentialTrace& trace, const DetectorSettings& settings);

/// Chronological events with merge_window applied, as a SpikeTrain.
SpikeTrain detect_merged(const PotentialTrace& trace, const DetectorSettings& settings);

enum class ResponseGroup { none, A, B };
std::string to_string(ResponseGroup g);

struct StimulusResponse {
  bool halted = false;
  /// Onset to the last spike seen inside the lit window (0 when none).
  double latency_on = 0.0;
  /// Lit-window end to the first later spike; absent when spiking never resumes.
  std::optional<double> latency_off;
  ResponseGroup group = ResponseGroup::none;
  SpikeStats pre;
  SpikeStats during;
  SpikeStats post;
  StimulusSegment lit;
};

/// Splits the trace around the first lit segment (phi above base) and
/// compares pre- and post-stimulus spiking. Halting means no spike inside
/// the lit window once a grace period of one pre-stimulus mean period has
/// passed. Throws ClassificationImpossible without a lit segment or without
/// pre-stimulus spikes.
StimulusResponse classify_response(const PotentialTrace& trace, const StimulusSchedule& schedule,
                                   const DetectorSettings& settings = {});

/// Fixed-key-order plain-text report of a response.
std::string format_response(const StimulusResponse& r);

}  // namespace bzmarble
