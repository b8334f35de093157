#include "pinsurf/bus.hpp"

#include <algorithm>

#include "pinsurf/error.hpp"

namespace pinsurf {

Timeline schedule(std::span<const Frame> frames, const BusConfig& config, Millis start) {
  if (frames.empty()) fail(ErrorCode::InvalidInput, "schedule: no frames");
  if (config.t_msg <= Millis{0}) fail(ErrorCode::InvalidInput, "schedule: t_msg must be positive");
  Timeline timeline;
  timeline.events.reserve(frames.size());
  Millis slot = start;
  for (const Frame& frame : frames) {
    BusEvent event{slot, slot, frame, std::nullopt};
    if (config.mode == BusMode::Sequential) {
      if (!frame.seq_id) fail(ErrorCode::Protocol, "schedule: sequential frame without seq_id");
      event.recipient = frame.seq_id;
    }
    timeline.events.push_back(std::move(event));
    slot += config.t_msg;
  }
  timeline.horizon = slot;
  return timeline;
}

Timeline merge(const Timeline& a, const Timeline& b) {
  Timeline out;
  out.events.reserve(a.events.size() + b.events.size());
  std::merge(a.events.begin(), a.events.end(), b.events.begin(), b.events.end(),
             std::back_inserter(out.events),
             [](const BusEvent& x, const BusEvent& y) { return x.arrival_time < y.arrival_time; });
  out.horizon = std::max(a.horizon, b.horizon);
  return out;
}

void replay(const Timeline& timeline, std::size_t n_modules, const FrameSink& sink) {
  for (const BusEvent& event : timeline.events) {
    if (event.recipient) {
      if (*event.recipient >= 0 && static_cast<std::size_t>(*event.recipient) < n_modules) {
        sink(*event.recipient, event);
      }
      continue;
    }
    for (std::size_t m = 0; m < n_modules; ++m) sink(static_cast<int>(m), event);
  }
}

}  // namespace pinsurf
