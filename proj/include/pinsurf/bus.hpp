#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pinsurf/frame.hpp"

namespace pinsurf {

// Simulation clock: integer milliseconds since the start of a run.
using Millis = std::chrono::milliseconds;

enum class BusMode { Sequential, Broadcast };

struct BusConfig {
  Millis t_msg{5};  // one transmission slot
  BusMode mode = BusMode::Broadcast;
};

struct BusEvent {
  Millis send_time{0};
  Millis arrival_time{0};
  Frame frame;
  // nullopt addresses every module.
  std::optional<int> recipient;
};

struct Timeline {
  std::vector<BusEvent> events;  // sorted by arrival_time
  Millis horizon{0};             // one past the last occupied slot
};

// Frame i goes out at start + i * t_msg and arrives within its slot.
// Sequential mode addresses frame i to its seq_id; broadcast mode to all.
Timeline schedule(std::span<const Frame> frames, const BusConfig& config, Millis start);

// Stable merge of two timelines by arrival time.
Timeline merge(const Timeline& a, const Timeline& b);

using FrameSink = std::function<void(int module, const BusEvent& event)>;

// Calls `sink` once per (event, recipient) in arrival order. Broadcast events
// fan out to modules 0 .. n_modules - 1 in index order.
void replay(const Timeline& timeline, std::size_t n_modules, const FrameSink& sink);

}  // namespace pinsurf
