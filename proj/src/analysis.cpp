#include "bzmarble/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bzmarble/error.hpp"
#include "bzmarble/numfmt.hpp"

namespace bzmarble {

SpikeTrain detect_spikes(std::span<const long> steps, std::span<const double> values, double hi, double lo) {
  if (!(hi > lo)) throw InvalidThreshold("detect_spikes requires hi > lo");
  if (steps.size() != values.size()) throw InvalidParameter("steps and values differ in length");
  SpikeTrain train{{}, hi, lo};
  bool open = false;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!open) {
      if (v >= hi) {
        open = true;
        peak = i;
      }
    } else if (v < lo) {
      train.spike_steps.push_back(steps[peak]);
      open = false;
    } else if (v > values[peak]) {
      peak = i;
    }
  }
  return train;
}

SpikeTrain detect_spikes(const PotentialTrace& trace, double hi, double lo) {
  std::vector<long> steps;
  steps.reserve(trace.size());
  for (const auto& s : trace.samples()) steps.push_back(s.step);
  const auto values = trace.potentials();
  return detect_spikes(steps, values, hi, lo);
}

std::optional<Thresholds> default_thresholds(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double range = sorted.back() - median;
  if (!(range > 0.0)) return std::nullopt;
  const Thresholds t{median + 0.3 * range, median + 0.1 * range};
  if (!(t.hi > t.lo)) return std::nullopt;
  return t;
}

std::string to_string(FrequencyClass c) {
  return c == FrequencyClass::low_frequency ? "low_frequency" : "typical";
}

SpikeStats period_stats(const SpikeTrain& train, double dt_per_step) {
  SpikeStats stats;
  const auto& s = train.spike_steps;
  stats.n_spikes = s.size();
  if (s.size() < 2) return stats;
  const double gaps = static_cast<double>(s.size() - 1);
  const double mean = static_cast<double>(s.back() - s.front()) * dt_per_step / gaps;
  double ss = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double d = static_cast<double>(s[i] - s[i - 1]) * dt_per_step - mean;
    ss += d * d;
  }
  stats.mean_period = mean;
  stats.sigma = std::sqrt(ss / gaps);
  stats.classification = mean > kLowFrequencyPeriod ? FrequencyClass::low_frequency : FrequencyClass::typical;
  return stats;
}

std::vector<SpikeEvent> detect_events(const PotentialTrace& trace, const DetectorSettings& settings) {
  std::vector<long> steps;
  steps.reserve(trace.size());
  for (const auto& s : trace.samples()) steps.push_back(s.step);
  std::vector<double> values = trace.potentials();

  auto thresholds_for = [&](std::span<const double> v) -> std::optional<Thresholds> {
    if (settings.hi || settings.lo) {
      if (!settings.hi || !settings.lo) throw InvalidThreshold("hi and lo must be given together");
      return Thresholds{*settings.hi, *settings.lo};
    }
    return default_thresholds(v);
  };

  std::vector<SpikeEvent> events;
  auto collect = [&](std::span<const double> v, Polarity pol) {
    const auto t = thresholds_for(v);
    if (!t) return;
    const auto train = detect_spikes(steps, v, t->hi, t->lo);
    for (long st : train.spike_steps) {
      const auto idx = static_cast<std::size_t>(std::lower_bound(steps.begin(), steps.end(), st) - steps.begin());
      events.push_back({st, pol, values[idx]});
    }
  };
  collect(values, Polarity::positive);
  if (settings.both_polarities) {
    std::vector<double> negated(values.size());
    std::transform(values.begin(), values.end(), negated.begin(), [](double x) { return -x; });
    collect(negated, Polarity::negative);
  }
  std::stable_sort(events.begin(), events.end(), [](const SpikeEvent& a, const SpikeEvent& b) { return a.step < b.step; });
  return events;
}

SpikeTrain detect_merged(const PotentialTrace& trace, const DetectorSettings& settings) {
  SpikeTrain train;
  for (const auto& e : detect_events(trace, settings)) {
    if (!train.spike_steps.empty() && e.step - train.spike_steps.back() < settings.merge_window) continue;
    train.spike_steps.push_back(e.step);
  }
  return train;
}

std::string to_string(ResponseGroup g) {
  switch (g) {
    case ResponseGroup::A:
      return "A";
    case ResponseGroup::B:
      return "B";
    case ResponseGroup::none:
      break;
  }
  return "none";
}

StimulusResponse classify_response(const PotentialTrace& trace, const StimulusSchedule& schedule,
                                   const DetectorSettings& settings) {
  const auto lit_it = std::find_if(schedule.segments().begin(), schedule.segments().end(),
                                   [&](const StimulusSegment& s) { return s.phi > schedule.base_phi(); });
  if (lit_it == schedule.segments().end()) throw ClassificationImpossible("schedule has no lit segment");
  const StimulusSegment lit = *lit_it;

  const SpikeTrain all = detect_merged(trace, settings);
  SpikeTrain pre;
  SpikeTrain during;
  SpikeTrain post;
  for (long s : all.spike_steps) {
    if (s < lit.start) {
      pre.spike_steps.push_back(s);
    } else if (s < lit.end) {
      during.spike_steps.push_back(s);
    } else {
      post.spike_steps.push_back(s);
    }
  }
  if (pre.spike_steps.empty()) throw ClassificationImpossible("no spikes before the stimulus");

  const double dt = trace.dt();
  StimulusResponse r;
  r.lit = lit;
  r.pre = period_stats(pre, dt);
  r.during = period_stats(during, dt);
  r.post = period_stats(post, dt);

  const double grace = r.pre.mean_period.value_or(0.0);
  const double grace_end = static_cast<double>(lit.start) * dt + grace;
  r.halted = std::none_of(during.spike_steps.begin(), during.spike_steps.end(),
                          [&](long s) { return static_cast<double>(s) * dt > grace_end; });
  if (!during.spike_steps.empty()) {
    r.latency_on = static_cast<double>(during.spike_steps.back() - lit.start) * dt;
  }
  if (!post.spike_steps.empty()) {
    r.latency_off = static_cast<double>(post.spike_steps.front() - lit.end) * dt;
  }
  if (r.pre.mean_period && r.post.mean_period) {
    if (*r.post.mean_period > *r.pre.mean_period) {
      r.group = ResponseGroup::A;
    } else if (*r.post.mean_period < *r.pre.mean_period) {
      r.group = ResponseGroup::B;
    }
  }
  return r;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "null"; }

}  // namespace

std::string format_response(const StimulusResponse& r) {
  std::ostringstream os;
  os << "{\n"
     << "  \"halted\": " << (r.halted ? "true" : "false") << ",\n"
     << "  \"latency_on\": " << format_double(r.latency_on) << ",\n"
     << "  \"latency_off\": " << opt(r.latency_off) << ",\n"
     << "  \"group\": \"" << to_string(r.group) << "\",\n"
     << "  \"pre_n_spikes\": " << r.pre.n_spikes << ",\n"
     << "  \"pre_mean_period\": " << opt(r.pre.mean_period) << ",\n"
     << "  \"pre_sigma\": " << opt(r.pre.sigma) << ",\n"
     << "  \"during_n_spikes\": " << r.during.n_spikes << ",\n"
     << "  \"post_n_spikes\": " << r.post.n_spikes << ",\n"
     << "  \"post_mean_period\": " << opt(r.post.mean_period) << ",\n"
     << "  \"post_sigma\": " << opt(r.post.sigma) << "\n"
     << "}\n";
  return os.str();
}

}  // namespace bzmarble
