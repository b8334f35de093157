#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "pinsurf/bus.hpp"
#include "pinsurf/frame.hpp"

namespace pinsurf {

struct ModuleId {
  int n = 0;
  double x = 0.0;
  double y = 0.0;
};

// x = n, y = 0.
ModuleId module_id_1d(int n);
// (x, y) = (n mod cols, n div cols).
ModuleId module_id_2d(int n, std::size_t cols);

struct MotorParams {
  double max_speed_mm_s = 125.0;
  double stroke_mm = 70.0;
  Millis pid_period{16};
  double kp = 20.0;  // 1/s
  double ki = 0.0;
  double kd = 0.0;
  // Target height = stroke * (input_offset + input_gain * f_n), clamped to
  // the stroke.
  double input_offset = 0.0;
  double input_gain = 1.0;
};

void validate(const MotorParams& params);

struct ModuleState {
  ModuleId id;
  double target_f = 0.0;  // accumulated control input, stroke-normalised
  double position = 0.0;  // h_n, mm
  double velocity = 0.0;  // commanded by the last loop update, mm/s
  double integrator = 0.0;
  double prev_error = 0.0;
  bool has_prev_error = false;
};

double target_height_mm(const ModuleState& state, const MotorParams& params);

// DCT/MP/RBF terms add to the accumulated input, WAVE replaces it, SEQ
// replaces it with h / stroke when addressed to this module. A restart flag
// zeroes the input first.
ModuleState apply_term(ModuleState state, const Term& term, bool restart, const CodecConfig& codec);
ModuleState on_frame(ModuleState state, const Frame& frame, const CodecConfig& codec);

ModuleState reset_target(ModuleState state, double level);

// One position-loop update: saturated PID velocity command. The integrator
// is frozen while the speed limit is active or the command would drive the
// shaft past an end stop within the period.
ModuleState pid_step(ModuleState state, const MotorParams& params);

// Moves the shaft at its commanded velocity for dt, clamped to the stroke.
ModuleState advance(ModuleState state, const MotorParams& params, Millis dt);

struct RobotConfig {
  std::size_t n_modules = 16;
  // 0 lays modules out on a line (x = n); otherwise row-major with this many
  // columns.
  std::size_t cols = 0;
  MotorParams motor;
  CodecConfig codec;  // n_total is forced to n_modules
  double initial_level = 0.5;  // input and position start here (stroke fraction)
  // Gaussian noise on reported positions; 0 disables.
  double noise_sigma_mm = 0.0;
  std::uint64_t noise_seed = 1;
};

struct ModuleTrace {
  std::vector<double> target_f;  // one sample per ms
  std::vector<double> position;  // true position, mm
  std::vector<double> reported;  // position plus measurement noise, mm
};

// All modules of one robot on a shared 1 kHz clock. Frames delivered at time
// t are applied before the PID update and the sample for t.
class Robot {
 public:
  explicit Robot(RobotConfig config);

  std::size_t size() const noexcept { return modules_.size(); }
  Millis now() const noexcept { return now_; }
  const RobotConfig& config() const noexcept { return config_; }
  const std::vector<ModuleState>& modules() const noexcept { return modules_; }
  const std::vector<ModuleTrace>& traces() const noexcept { return traces_; }

  void deliver(int module, const Frame& frame);
  void deliver(const BusEvent& event);
  // Bypasses the wire format (ideal full-precision channel).
  void apply(int module, const Term& term, bool restart);
  void apply_all(const Term& term, bool restart);

  // Advance one millisecond: PID if due, move, then record a sample.
  void tick();

  // Last reported position of every module.
  std::vector<double> reported_positions() const;

 private:
  void record();

  RobotConfig config_;
  std::vector<ModuleState> modules_;
  std::vector<ModuleTrace> traces_;
  Millis now_{0};
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
};

// Co-simulates bus replay and every module's loop for `horizon` ms.
std::vector<ModuleTrace> run_robot(const RobotConfig& config, const Timeline& plan, Millis horizon);

}  // namespace pinsurf
