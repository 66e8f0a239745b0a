#include "bzmarble/stimulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bzmarble/error.hpp"

namespace bzmarble {

StimulusSchedule::StimulusSchedule(double base_phi, std::vector<StimulusSegment> segments)
    : base_phi_(base_phi), segments_(std::move(segments)) {
  if (!(base_phi_ >= 0.0)) throw InvalidParameter("base phi must be non-negative");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (s.start < 0 || s.end <= s.start) {
      throw InvalidParameter("stimulus segment " + std::to_string(i) + " must satisfy 0 <= start < end");
    }
    if (!(s.phi >= 0.0)) throw InvalidParameter("stimulus segment phi must be non-negative");
    if (i > 0 && s.start < segments_[i - 1].end) {
      throw InvalidParameter("stimulus segments overlap or are not sorted by start");
    }
  }
}

const StimulusSegment* StimulusSchedule::segment_at(long step) const noexcept {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), step,
                             [](long s, const StimulusSegment& seg) { return s < seg.start; });
  if (it == segments_.begin()) return nullptr;
  --it;
  return step < it->end ? &*it : nullptr;
}

double StimulusSchedule::phi_at(long step) const noexcept {
  const auto* seg = segment_at(step);
  return seg ? seg->phi : base_phi_;
}

bool excite(MarbleState& state, const ExcitationSource& source) {
  const DomainMask& mask = state.mask();
  const long r2 = static_cast<long>(source.radius) * source.radius;
  bool any = false;
  for (int y = std::max(0, source.y - source.radius); y <= std::min(mask.height() - 1, source.y + source.radius);
       ++y) {
    for (int x = std::max(0, source.x - source.radius); x <= std::min(mask.width() - 1, source.x + source.radius);
         ++x) {
      const long dx = x - source.x;
      const long dy = y - source.y;
      if (dx * dx + dy * dy <= r2 && mask.active(x, y)) {
        state.u.row(y)[x] = source.amplitude;
        any = true;
      }
    }
  }
  return any;
}

std::string_view to_string(FiringKind kind) noexcept {
  switch (kind) {
    case FiringKind::spawn:
      return "spawn";
    case FiringKind::fire:
      return "fire";
    case FiringKind::expire:
      return "expire";
  }
  return "?";
}

long uniform_int(std::mt19937_64& engine, long lo, long hi) {
  if (hi < lo) throw InvalidParameter("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return lo + static_cast<long>(engine());
  // Largest multiple of span that fits; values above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r = engine();
  while (r >= limit) r = engine();
  return lo + static_cast<long>(r % span);
}

SourceManager::SourceManager(const DomainMask& mask, SourceManagerSettings settings, std::uint64_t seed)
    : settings_(settings), engine_(seed) {
  if (settings_.period.lo < 1 || settings_.period.hi < settings_.period.lo) {
    throw InvalidParameter("source period range must satisfy 1 <= lo <= hi");
  }
  if (settings_.lifetime.lo < 1 || settings_.lifetime.hi < settings_.lifetime.lo) {
    throw InvalidParameter("source lifetime range must satisfy 1 <= lo <= hi");
  }
  if (settings_.radius < 0 || settings_.rim_band < 0) {
    throw InvalidParameter("source radius and rim band must be non-negative");
  }
  const double margin = std::max(settings_.rim_band, settings_.radius);
  const double limit = mask.radius_nodes() - margin;
  for (int y = 0; y < mask.height(); ++y) {
    const auto span = mask.row_span(y);
    for (int x = span.begin; x < span.end; ++x) {
      const double dx = x - mask.center_x();
      const double dy = y - mask.center_y();
      if (std::sqrt(dx * dx + dy * dy) <= limit) candidates_.emplace_back(x, y);
    }
  }
  if (candidates_.empty()) throw InvalidParameter("no cell is far enough from the rim to host a source");
}

void SourceManager::advance(MarbleState& state, long step, std::vector<FiringEvent>* log) {
  if (current_ && current_->expired_at(step)) {
    if (log) log->push_back({step, FiringKind::expire, current_->x, current_->y, current_->period, current_->lifetime});
    current_.reset();
  }
  if (!current_) {
    const auto idx = uniform_int(engine_, 0, static_cast<long>(candidates_.size()) - 1);
    ExcitationSource src;
    src.x = candidates_[static_cast<std::size_t>(idx)].first;
    src.y = candidates_[static_cast<std::size_t>(idx)].second;
    src.radius = settings_.radius;
    src.amplitude = settings_.amplitude;
    src.period = uniform_int(engine_, settings_.period.lo, settings_.period.hi);
    src.lifetime = uniform_int(engine_, settings_.lifetime.lo, settings_.lifetime.hi);
    src.birth_step = step;
    current_ = src;
    if (log) log->push_back({step, FiringKind::spawn, src.x, src.y, src.period, src.lifetime});
  }
  if (current_->fires_at(step)) {
    excite(state, *current_);
    if (log) log->push_back({step, FiringKind::fire, current_->x, current_->y, current_->period, current_->lifetime});
  }
}

int advance_scripted(const std::vector<ExcitationSource>& sources, MarbleState& state, long step,
                      std::vector<FiringEvent>* log) {
  int missed = 0;
  for (const auto& src : sources) {
    if (step == src.birth_step && log) {
      log->push_back({step, FiringKind::spawn, src.x, src.y, src.period, src.lifetime});
    }
    if (step - src.birth_step == src.lifetime && log) {
      log->push_back({step, FiringKind::expire, src.x, src.y, src.period, src.lifetime});
    }
    if (src.fires_at(step)) {
      if (!excite(state, src)) ++missed;
      if (log) log->push_back({step, FiringKind::fire, src.x, src.y, src.period, src.lifetime});
    }
  }
  return missed;
}

}  // namespace bzmarble
