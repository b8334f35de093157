#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinsurf/approx.hpp"
#include "pinsurf/bus.hpp"
#include "pinsurf/module_sim.hpp"

namespace pinsurf {

// Lag (ms) maximising the mean-removed, norm-divided correlation of the
// overlapping parts of a and b, refined by a parabola through the peak.
// Positive when b lags a. Lags range over [-max_lag, max_lag] samples
// (default: half the trace length).
double xcorr_delay(std::span<const double> a, std::span<const double> b, double dt_ms = 1.0,
                   std::optional<std::size_t> max_lag = {});

struct DelayResult {
  std::size_t n = 0;
  Millis t_msg{0};
  Form method = Form::Seq;
  double tau_measured_ms = 0.0;
  double tau_predicted_ms = 0.0;
  std::size_t replicates = 0;
};

// Toggles every module between f = 0 and f = 1 and correlates the input
// traces of the first and last module. Seq sends n addressed frames per
// refresh; Dct and Wave broadcast one constant-field frame.
DelayResult run_delay_binary(std::size_t n, Millis t_msg, Form method, std::size_t replicates = 20);

// Independent (method, n, t_msg) cells run on up to `threads` workers
// (0 = hardware concurrency); results come back in method, n, t_msg order.
struct DelayGrid {
  bool wave = false;
  std::vector<std::size_t> ns;
  std::vector<Millis> t_msgs;
  std::vector<Form> methods;
  std::size_t replicates = 20;
  Millis period{3000};
  unsigned threads = 0;
};

std::vector<DelayResult> run_delay_grid(const DelayGrid& grid);

// Travelling wave sin(k_N x - v t) with k_N = pi / (2 (n - 1)), v = 2 pi / T,
// correlated on the first and last module's position traces.
DelayResult run_delay_wave(std::size_t n, Millis t_msg, Form method, Millis period,
                           std::size_t replicates = 6);

struct ErrorPoint {
  std::size_t terms_used = 0;
  double rel_error = 0.0;        // settled positions of the simulated robot
  double predicted_error = 0.0;  // the partial sum itself, no actuator
};

struct ErrorCurve {
  std::string shape_name;
  Form method = Form::Mp;
  bool quantized = false;
  std::vector<ErrorPoint> points;  // starts at terms_used = 0
};

struct ShapeExperiment {
  BuiltinShape shape = BuiltinShape::Parabola;
  Form method = Form::Mp;
  bool quantized = false;
  std::size_t replicates = 6;
  std::uint64_t seed = 1;  // Random shape
  std::size_t max_terms = 16;
  double noise_sigma_mm = 0.0;
  MotorParams motor;
  MpOptions mp;
  double settle_band_mm = 0.05;
  Millis settle_window{100};
  Millis settle_timeout{20000};
};

// Starts level at half stroke, then adds one term at a time and records the
// relative error once every module is stationary. MP point k restarts and
// sends the k atoms left after k pursuit iterations.
ErrorCurve run_shape_experiment(const ShapeExperiment& experiment);

struct TrajectoryScript {
  std::vector<std::pair<double, double>> waypoints;  // module coordinates
  bool closed = true;                                 // return to the first waypoint
  double rate_hz = 60.0;
  Millis duration{2000};
  double sigma = 1.0;  // module pitches
  double amplitude = 1.0;
  double pitch_mm = 21.25;
};

struct ManipulationTick {
  double time_ms = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
  std::size_t frames = 0;
  std::vector<double> targets;  // per-module input f after the frame
};

struct ManipulationResult {
  std::size_t n_cols = 0;
  std::size_t n_rows = 0;
  std::vector<ManipulationTick> ticks;
  std::size_t total_frames = 0;
  double path_length_mm = 0.0;
  double duration_ms = 0.0;
  double mean_speed_mm_s = 0.0;
};

// Moves one Gaussian along the waypoints at constant speed, one broadcast
// RBF frame per tick.
ManipulationResult run_manipulation(const TrajectoryScript& script, std::size_t n_cols,
                                    std::size_t n_rows);

// Rectangle of w x h mm starting at the corner (x0, y0), in module units.
TrajectoryScript rectangle_script(double x0, double y0, double width_mm, double height_mm,
                                  double pitch_mm = 21.25);

// Header row plus one row per record; floats use 9 significant digits.
std::string to_csv(std::span<const DelayResult> results);
std::string to_csv(const ErrorCurve& curve);
std::string to_csv(std::span<const ErrorCurve> curves);
std::string to_csv(const ManipulationResult& result);

// Writes text to path ("-" is stdout); Io errors carry the path.
void write_file(const std::string& path, const std::string& text);

void emit_csv(std::span<const DelayResult> results, const std::string& path);
void emit_csv(std::span<const ErrorCurve> curves, const std::string& path);
void emit_csv(const ManipulationResult& result, const std::string& path);

}  // namespace pinsurf
